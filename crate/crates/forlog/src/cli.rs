//! The `forlog` command-line front end: batch runner, REPL, and translator.
//!
//! Exit codes: 0 when every query succeeded, 1 when some query had no
//! solutions, 2 on a parse or runtime error (diagnostic on stderr).

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::ast::{Goal, Program, Term, VarSource};
use crate::builtins;
use crate::engine::{
    strip_query_binders, EmptySource, Flow, Machine, MachineOpts, RuntimeError, ScriptSource,
    TermSource,
};
use crate::reader;
use crate::translate;

#[derive(Parser)]
#[command(
    name = "forlog",
    version,
    about = "Interpreter and translator for the forlog logic language"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load programs and run a query (or the embedded `?-` queries)
    Run(Config),
    /// Interactive goal prompt over the loaded programs
    Repl(ReplConfig),
    /// Eliminate loop goals and print the plain program
    Translate(TranslateConfig),
}

#[derive(Args)]
struct Config {
    /// Program files (.fl)
    files: Vec<PathBuf>,
    /// Goal to run instead of the files' embedded queries
    #[arg(short, long)]
    query: Option<String>,
    #[arg(long)]
    occurs_check: bool,
    /// Stop after N solutions per query
    #[arg(long, value_name = "N")]
    max_solutions: Option<usize>,
    /// Bound the goal-stack depth; exceeding it is an error
    #[arg(long, value_name = "N")]
    depth_limit: Option<usize>,
    /// Script file feeding read/1
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    /// Log calls to stderr
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct ReplConfig {
    files: Vec<PathBuf>,
    #[arg(long)]
    occurs_check: bool,
    #[arg(long, value_name = "N")]
    max_solutions: Option<usize>,
    #[arg(long, value_name = "N")]
    depth_limit: Option<usize>,
    /// Script file feeding read/1 (instead of the terminal)
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,
    #[arg(long)]
    trace: bool,
}

#[derive(Args)]
struct TranslateConfig {
    files: Vec<PathBuf>,
}

pub fn main() -> i32 {
    match Cli::parse().command {
        Command::Run(cfg) => cmd_run(cfg),
        Command::Repl(cfg) => cmd_repl(cfg),
        Command::Translate(cfg) => cmd_translate(cfg),
    }
}

fn load(files: &[PathBuf], vars: &mut VarSource) -> Result<(Program, Vec<Goal>), String> {
    let mut clauses = Vec::new();
    let mut queries = Vec::new();
    for path in files {
        let text =
            fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let unit = reader::parse_program(&text, &path.display().to_string(), vars)
            .map_err(|e| format!("{}: {e}", path.display()))?;
        clauses.extend(unit.clauses);
        queries.extend(unit.queries);
    }
    let program = Program::from_clauses(clauses);
    for clause in program.clauses() {
        let (name, arity) = clause.key();
        if builtins::is_builtin(&name, arity) {
            return Err(format!("cannot redefine builtin {name}/{arity}"));
        }
    }
    Ok((program, queries))
}

fn opts_of(occurs_check: bool, depth_limit: Option<usize>, trace: bool) -> MachineOpts {
    MachineOpts {
        occurs_check,
        depth_limit,
        trace,
    }
}

/// Reads one term per line from the terminal, for interactive read/1.
struct StdinSource;

impl TermSource for StdinSource {
    fn next_term(&mut self, vars: &mut VarSource) -> Result<Term, RuntimeError> {
        let mut line = String::new();
        loop {
            line.clear();
            let n = io::stdin()
                .read_line(&mut line)
                .map_err(|e| RuntimeError::Io(e.to_string()))?;
            if n == 0 {
                return Err(RuntimeError::EndOfInput);
            }
            if line.trim().is_empty() {
                continue;
            }
            return reader::parse_term(line.trim(), vars)
                .map_err(|e| RuntimeError::MalformedInput(e.to_string()));
        }
    }
}

fn open_input(
    path: &Option<PathBuf>,
    vars: &mut VarSource,
    interactive: bool,
) -> Result<Box<dyn TermSource>, String> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| format!("{}: {e}", p.display()))?;
            let script = ScriptSource::new(&text, vars)
                .map_err(|e| format!("{}: {e}", p.display()))?;
            Ok(Box::new(script))
        }
        None if interactive => Ok(Box::new(StdinSource)),
        None => Ok(Box::new(EmptySource)),
    }
}

fn render_answer(sol: &crate::engine::Solution) -> String {
    let mut out = String::new();
    for (name, term) in &sol.answer {
        out.push_str(name);
        out.push_str(" = ");
        out.push_str(&builtins::render_term(term));
        out.push('\n');
    }
    out
}

fn cmd_run(cfg: Config) -> i32 {
    let mut vars = VarSource::new();
    let (program, embedded) = match load(&cfg.files, &mut vars) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let queries = match &cfg.query {
        Some(text) => match reader::parse_goal(text, &mut vars) {
            Ok(g) => vec![g],
            Err(e) => {
                eprintln!("error: {e}");
                return 2;
            }
        },
        None => embedded,
    };
    let mut input = match open_input(&cfg.input, &mut vars, false) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };

    let stdout = io::stdout();
    let mut out = stdout.lock();
    let opts = opts_of(cfg.occurs_check, cfg.depth_limit, cfg.trace);
    let mut any_no = false;
    for goal in &queries {
        let mut machine = Machine::new(
            &program,
            VarSource::starting_at(vars.next_id()),
            &mut out,
            input.as_mut(),
            opts,
        );
        match machine.run_query(goal, cfg.max_solutions) {
            Err(e) => {
                let _ = machine.sink().flush();
                eprintln!("error: {e}");
                return 2;
            }
            Ok(solutions) => {
                let mut text = String::new();
                if machine.sink().needs_newline() {
                    text.push('\n');
                }
                if solutions.is_empty() {
                    any_no = true;
                    text.push_str("no\n");
                } else {
                    for sol in &solutions {
                        text.push_str(&render_answer(sol));
                    }
                    text.push_str("yes\n");
                }
                if machine.sink().write_str(&text).is_err() {
                    return 2;
                }
                let _ = machine.sink().flush();
            }
        }
    }
    if any_no {
        1
    } else {
        0
    }
}

fn cmd_translate(cfg: TranslateConfig) -> i32 {
    let mut vars = VarSource::new();
    let (program, _) = match load(&cfg.files, &mut vars) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let unit = translate::eliminate_foralls(&program);
    print!("{}", translate::pretty_program(&unit.translated));
    0
}

fn cmd_repl(cfg: ReplConfig) -> i32 {
    let mut vars = VarSource::new();
    let (program, _) = match load(&cfg.files, &mut vars) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let mut input = match open_input(&cfg.input, &mut vars, true) {
        Ok(i) => i,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    let opts = opts_of(cfg.occurs_check, cfg.depth_limit, cfg.trace);
    let halt = Goal::Call(Term::atom("halt"));

    let stdin = io::stdin();
    loop {
        print!("?- ");
        let _ = io::stdout().flush();
        let mut line = String::new();
        match stdin.lock().read_line(&mut line) {
            Ok(0) | Err(_) => break, // end of input
            Ok(_) => {}
        }
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let goal = match reader::parse_goal(line, &mut vars) {
            Ok(g) => g,
            Err(e) => {
                eprintln!("error: {e}");
                continue;
            }
        };
        if goal == halt {
            break;
        }
        run_interactive(&program, &goal, &mut vars, input.as_mut(), opts);
    }
    0
}

/// Print solutions one at a time; `;` asks for the next one, anything else
/// accepts. Goals without query variables accept their first solution.
fn run_interactive(
    program: &Program,
    goal: &Goal,
    vars: &mut VarSource,
    input: &mut dyn TermSource,
    opts: MachineOpts,
) {
    let (open, qvars) = strip_query_binders(goal);
    let named: Vec<_> = qvars.iter().filter(|v| v.name != "_").collect();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut machine = Machine::new(
        program,
        VarSource::starting_at(vars.next_id()),
        &mut out,
        input,
        opts,
    );
    let mut count = 0usize;
    let result = machine.solve(open, 0, &mut |m| {
        count += 1;
        if named.is_empty() {
            return Ok(Flow::Done);
        }
        let mut text = String::new();
        if m.sink().needs_newline() {
            text.push('\n');
        }
        for v in &named {
            let t = m.bind.resolve(&Term::Var((*v).clone()))?;
            text.push_str(&format!("{} = {}\n", v.name, builtins::render_term(&t)));
        }
        m.sink().write_str(&text)?;
        m.sink().flush()?;
        // `;` requests another solution, a bare newline accepts this one.
        let mut reply = String::new();
        match io::stdin().read_line(&mut reply) {
            Ok(n) if n > 0 && reply.trim() == ";" => Ok(Flow::More),
            _ => Ok(Flow::Done),
        }
    });
    let mut text = String::new();
    if machine.sink().needs_newline() {
        text.push('\n');
    }
    match result {
        Err(e) => {
            let _ = machine.sink().write_str(&text);
            let _ = machine.sink().flush();
            eprintln!("error: {e}");
            return;
        }
        Ok(Flow::Done) => text.push_str("yes\n"),
        Ok(Flow::More) => {
            if count == 0 {
                text.push_str("no\n");
            } else {
                // The user asked for more and the enumeration ran out.
                text.push_str("no\n");
            }
        }
    }
    let _ = machine.sink().write_str(&text);
    let _ = machine.sink().flush();
}
