//! The `ici` command: certificates, transforms, moment checks, the dyadic
//! counterexample and a Monte Carlo tester, with TOML configs and JSON/CSV
//! reports.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use args::{Cli, Command, ConfigFile};
use error::CliError;

fn load_config(path: Option<&std::path::Path>) -> Result<ConfigFile, CliError> {
    let Some(path) = path else {
        return Ok(ConfigFile::default());
    };
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    toml::from_str(&text).map_err(|e| CliError::Config(vec![format!("{}: {}", path.display(), e.message())]))
}

/// Runs one subcommand. `Ok(true)` when every requested check passed.
pub fn run(cli: Cli) -> Result<bool, CliError> {
    let file = load_config(cli.config.as_deref())?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build()?;
    let dist = file.dist.as_ref();
    pool.install(|| match cli.command {
        Command::Certify(mut a) => {
            a.fill_from(file.certify);
            commands::certify::run(a, dist)
        }
        Command::Transform(mut a) => {
            a.fill_from(file.transform);
            commands::transform::run(a)
        }
        Command::Moments(mut a) => {
            a.fill_from(file.moments);
            commands::moments::run(a, dist)
        }
        Command::Counterexample(mut a) => {
            a.fill_from(file.counterexample);
            commands::counterexample::run(a)
        }
        Command::McIci(mut a) => {
            a.fill_from(file.mc_ici);
            commands::mc_ici::run(a, dist)
        }
    })
}
