pub mod clean;
pub mod evaluate;
pub mod gen_tests;
pub mod judge;
pub mod lcs;
pub mod rating;
pub mod select;
pub mod simulate;

use cpeval_core::runner::{ExecPool, Runner, SandboxConfig};

use crate::util::{load_registry, CmdError};
use crate::Cli;

/// Build the runner and its worker pool from the global flags.
pub fn runner_and_pool(cli: &Cli) -> Result<(Runner, ExecPool), CmdError> {
    let registry = load_registry(&cli.config)?;
    let runner = Runner::new(registry, SandboxConfig::default());
    let pool = runner.pool(cli.workers);
    Ok((runner, pool))
}
