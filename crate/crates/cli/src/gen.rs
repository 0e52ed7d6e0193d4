use std::io::Write;
use std::path::PathBuf;

use beldim::io::instance_to_string;
use beldim::zoo::{make_appF_a, make_appF_b, make_prop34, make_random_realizable};

use crate::cli::{GenArgs, Generator};
use crate::output::write_atomic;
use crate::{CliError, CliResult};

fn required<T: Copy>(value: Option<T>, flag: &str, generator: Generator) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("{} requires --{flag}", generator.name())))
}

pub fn cmd_gen(args: &GenArgs, log: &mut dyn Write) -> CliResult<()> {
    let g = args.generator;
    let inst = match g {
        Generator::Prop34 => make_prop34(required(args.m, "m", g)?)?,
        Generator::AppFA => make_appF_a(required(args.m, "m", g)?)?,
        Generator::AppFB => make_appF_b(required(args.m, "m", g)?)?,
        Generator::Random => make_random_realizable(
            required(args.num_states, "S", g)?,
            required(args.num_actions, "A", g)?,
            required(args.horizon, "H", g)?,
            required(args.n_seeds, "seeds", g)?,
            required(args.seed, "seed", g)?,
        )?,
    };
    let out = args.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.json", inst.name.replace(':', "_"))));
    write_atomic(&out, &instance_to_string(&inst))?;
    writeln!(
        log,
        "{}: H={} S={} A={} |F|={} -> {}",
        inst.name,
        inst.mdp.horizon(),
        inst.mdp.num_states(),
        inst.mdp.num_actions(),
        inst.class.len(),
        out.display()
    )?;
    writeln!(log, "{} facts:", inst.facts.len())?;
    for fact in &inst.facts {
        writeln!(log, "  {}", fact.describe())?;
    }
    Ok(())
}
