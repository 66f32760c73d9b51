//! Config files and manifests: flat `key = value` text whose keys are long
//! flag names.

use std::ffi::OsString;
use std::path::Path;

use clap::{ArgMatches, Command};
use maoa::kv::KvDoc;

use crate::error::CliError;

/// Keys a manifest carries that are not flags.
const RESERVED: [&str; 2] = ["command", "version"];

/// Flags never written to or read from a config.
const LOCAL: [&str; 3] = ["out", "config", "help"];

/// Path given with `--config`, if any.
fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

fn subcommand_name<'a>(cmd: &Command, argv: &'a [OsString]) -> Option<&'a str> {
    argv.iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| cmd.find_subcommand(a).is_some())
}

fn given(argv: &[OsString], long: &str) -> bool {
    let flag = format!("--{long}");
    let eq = format!("--{long}=");
    argv.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&eq)
    })
}

/// Appends flags from the config file for every key not given on the
/// command line.
pub fn inject(cmd: &Command, argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let doc = KvDoc::read(Path::new(&path)).map_err(|e| CliError::from_core(e, "config"))?;
    let Some(name) = subcommand_name(cmd, &argv) else {
        return Ok(argv);
    };
    let sub = cmd.find_subcommand(name).expect("found above");
    if let Some(c) = doc.get("command") {
        if c != name {
            return Err(CliError::Validation(format!(
                "config was written for `{c}`, not `{name}`"
            )));
        }
    }
    let mut out = argv.clone();
    for (key, value) in doc.iter() {
        if RESERVED.contains(&key) || LOCAL.contains(&key) {
            continue;
        }
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key))
            .ok_or_else(|| CliError::Validation(format!("unknown config key {key:?} for `{name}`")))?;
        if given(&argv, key) {
            continue;
        }
        let takes_value = arg.get_action().takes_values();
        if !takes_value {
            match value {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                _ => return Err(CliError::Validation(format!("key {key:?} must be true or false"))),
            }
            continue;
        }
        out.push(format!("--{key}").into());
        let multi = arg.get_num_args().is_some_and(|n| n.max_values() > 1);
        if multi {
            out.extend(value.split_whitespace().map(OsString::from));
        } else {
            out.push(value.into());
        }
    }
    Ok(out)
}

/// Every resolved flag of the subcommand, defaults included.
pub fn resolved(cmd: &Command, name: &str, matches: &ArgMatches) -> KvDoc {
    let mut doc = KvDoc::new();
    doc.set("command", name);
    let sub = cmd.find_subcommand(name).expect("parsed subcommand");
    let mut ids: Vec<&str> = matches.ids().map(|i| i.as_str()).collect();
    ids.sort_unstable();
    for id in ids {
        // argument groups share the id space
        let is_arg = sub.get_arguments().chain(cmd.get_arguments()).any(|a| a.get_id() == id);
        // the seed is recorded after resolution, drawn or not
        if !is_arg || LOCAL.contains(&id) || id == "seed" {
            continue;
        }
        let Ok(Some(raw)) = matches.try_get_raw(id) else {
            continue;
        };
        let vals: Vec<String> = raw.map(|v| v.to_string_lossy().into_owned()).collect();
        if !vals.is_empty() {
            doc.set(id.replace('_', "-"), vals.join(" "));
        }
    }
    doc
}
