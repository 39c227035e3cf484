//! Flat `key = value` run configuration.
//!
//! Keys are the long flag names of the chosen command, plus `command`.
//! Values from the file go in front of the command-line flags, so flags win.

use std::collections::BTreeMap;
use std::fmt;

use anyhow::{anyhow, bail, Result};
use clap::CommandFactory;

use crate::Cli;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunConfig {
    pub entries: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| anyhow!("line {}: expected key = value", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() {
                bail!("line {}: empty key", i + 1);
            }
            if entries.insert(k.to_string(), v.to_string()).is_some() {
                bail!("line {}: duplicate key '{k}'", i + 1);
            }
        }
        Ok(RunConfig { entries })
    }

    pub fn command(&self) -> Option<&str> {
        self.entries.get("command").map(String::as_str)
    }

    /// Flags for `command`; unknown keys are an error.
    pub fn to_args(&self, command: &str) -> Result<Vec<String>> {
        let mut cli = Cli::command();
        cli.build();
        let sub = cli.find_subcommand(command).ok_or_else(|| anyhow!("unknown command '{command}'"))?;
        let mut out = Vec::new();
        for (k, v) in &self.entries {
            if k == "command" {
                if v != command {
                    bail!("config names command '{v}' but '{command}' was given");
                }
                continue;
            }
            let arg = sub
                .get_arguments()
                .find(|a| a.get_long() == Some(k.as_str()))
                .ok_or_else(|| anyhow!("unknown config key '{k}' for command '{command}'"))?;
            let is_switch = matches!(arg.get_action(), clap::ArgAction::SetTrue);
            if is_switch {
                match v.as_str() {
                    "true" | "1" | "yes" => out.push(format!("--{k}")),
                    "false" | "0" | "no" => {}
                    _ => bail!("config key '{k}' expects true or false, got '{v}'"),
                }
            } else {
                out.push(format!("--{k}"));
                out.push(v.clone());
            }
        }
        Ok(out)
    }
}

impl fmt::Display for RunConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in &self.entries {
            writeln!(f, "{k} = {v}")?;
        }
        Ok(())
    }
}
