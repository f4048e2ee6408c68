//! Config files, manifests and output sinks.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// Overlays the flags given on the command line onto a JSON config file.
///
/// A flag counts as given when it is not null and not `false`. The file may
/// also be a manifest written by an earlier run; its `args` are used.
pub fn merge_config<T: Serialize + DeserializeOwned>(cli: &T, config: Option<&Path>) -> Result<T> {
    let Some(path) = config else {
        return Ok(serde_json::from_value(serde_json::to_value(cli)?)?);
    };
    let text = fs::read_to_string(path)?;
    let mut file: Value = serde_json::from_str(&text)?;
    if let Some(args) = file.get("args").filter(|_| file.get("command").is_some()) {
        file = args.clone();
    }
    let Value::Object(mut base) = file else {
        return Err(Error::invalid("config", "top level must be a JSON object"));
    };
    let Value::Object(over) = serde_json::to_value(cli)? else {
        unreachable!("argument structs serialize to objects");
    };
    for (k, v) in over {
        if !matches!(v, Value::Null | Value::Bool(false)) || !base.contains_key(&k) {
            base.insert(k, v);
        }
    }
    base.remove("config");
    Ok(serde_json::from_value(Value::Object(base))?)
}

#[derive(Serialize)]
struct Manifest<'a, A: Serialize, P: Serialize> {
    command: &'a str,
    version: &'a str,
    seed: u64,
    args: &'a A,
    resolved: P,
}

/// Writes `manifest.json` next to the output (or at `explicit`).
pub fn write_manifest<A: Serialize, P: Serialize>(
    explicit: Option<&Path>,
    out: Option<&Path>,
    command: &str,
    seed: u64,
    args: &A,
    resolved: P,
) -> Result<Option<PathBuf>> {
    let path = match (explicit, out) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(o)) => o.parent().map(|d| d.join("manifest.json")).unwrap_or_else(|| PathBuf::from("manifest.json")),
        (None, None) => return Ok(None),
    };
    let mut args = serde_json::to_value(args)?;
    if let Value::Object(m) = &mut args {
        m.remove("config");
    }
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        args: &args,
        resolved,
    };
    fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")?;
    Ok(Some(path))
}

/// Writes `text` to `out`, or to stdout.
pub fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut s = std::io::stdout().lock();
            s.write_all(text.as_bytes())?;
            s.flush()?;
        }
    }
    Ok(())
}

pub fn to_json<T: Serialize + ?Sized>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// Shortest round-trip decimal; empty for a missing value.
pub fn num(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

/// CSV text from a header and rows of preformatted fields.
pub fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    String::from_utf8(bytes).map_err(|e| Error::Numerical(e.to_string()))
}

/// Object with the given keys, for JSON summaries.
pub fn object(pairs: Vec<(&str, Value)>) -> Value {
    Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Serialize, Deserialize, PartialEq)]
    struct A {
        config: Option<PathBuf>,
        mu: Option<f64>,
        alpha: Option<f64>,
        flag: bool,
    }

    #[test]
    fn flags_override_file() {
        let dir = std::env::temp_dir().join(format!("migrasim-cfg-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let f = dir.join("c.json");
        fs::write(&f, r#"{"mu": 2.0, "alpha": 3.0, "flag": true}"#).unwrap();
        let cli = A {
            config: Some(f.clone()),
            mu: Some(5.0),
            alpha: None,
            flag: false,
        };
        let got = merge_config(&cli, Some(&f)).unwrap();
        assert_eq!(
            got,
            A {
                config: None,
                mu: Some(5.0),
                alpha: Some(3.0),
                flag: true
            }
        );
        fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn csv_quotes_and_header() {
        let t = csv_text(&["a", "b"], vec![vec!["1".into(), "x,y".into()]]).unwrap();
        assert_eq!(t, "a,b\n1,\"x,y\"\n");
        assert_eq!(num(Some(0.1)), "0.1");
        assert_eq!(num(None), "");
    }
}
