//! The `VQH=> ` prompt.

use std::io::{BufRead, Write};

use vqh_core::sonify::Mapping;

use crate::session::{RunSummary, Session};

pub const PROMPT: &str = "VQH=> ";

pub const HELP: &str = "\
commands:
  runvqe                 run the VQE on the current h_setup.csv and vqe_conf.json
  wait                   block until the current run ends
  map <type>             sonify the last experiment
  mapfile <id> <type>    sonify a stored experiment
  stop                   stop sound emission
  quit | q               cancel any run and leave
types: additive fmlin fmlog inharm sub rotary arp pan";

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    RunVqe,
    Wait,
    Map(Mapping),
    MapFile(String, Mapping),
    Stop,
    Quit,
    Help,
}

fn mapping(name: &str) -> Result<Mapping, String> {
    Mapping::from_name(name).map_err(|e| e.to_string())
}

/// `Ok(None)` for a blank line.
pub fn parse_command(line: &str) -> Result<Option<Command>, String> {
    let words: Vec<&str> = line.split_whitespace().collect();
    let Some((&head, args)) = words.split_first() else {
        return Ok(None);
    };
    let arity = |n: usize, usage: &str| {
        if args.len() == n {
            Ok(())
        } else {
            Err(format!("usage: {usage}"))
        }
    };
    let cmd = match head {
        "runvqe" => arity(0, "runvqe").map(|()| Command::RunVqe),
        "wait" => arity(0, "wait").map(|()| Command::Wait),
        "map" => arity(1, "map <type>").and_then(|()| mapping(args[0]).map(Command::Map)),
        "mapfile" => arity(2, "mapfile <id> <type>")
            .and_then(|()| mapping(args[1]).map(|m| Command::MapFile(args[0].to_string(), m))),
        "stop" => arity(0, "stop").map(|()| Command::Stop),
        "quit" | "q" | "exit" => Ok(Command::Quit),
        "help" | "?" => Ok(Command::Help),
        other => Err(format!("unknown command {other:?}; type help")),
    }?;
    Ok(Some(cmd))
}

fn describe(s: &RunSummary) -> String {
    let mut line = format!(
        "experiment {} {}: {} records, final state {}, data in {}",
        s.id,
        if s.aborted { "aborted" } else { "finished" },
        s.records,
        s.final_state,
        s.dataset.display()
    );
    if let Some(book) = &s.book_id {
        line.push_str(&format!(", book {book}"));
    }
    line
}

/// Runs one command. Returns `false` when the session should end.
pub fn execute(session: &Session, cmd: Command, out: &mut impl Write) -> std::io::Result<bool> {
    match cmd {
        Command::RunVqe => match session.start_run() {
            Ok(id) => writeln!(out, "experiment {id} running")?,
            Err(e) => writeln!(out, "error: {e}")?,
        },
        Command::Wait => match session.wait() {
            Ok(Some(s)) => writeln!(out, "{}", describe(&s))?,
            Ok(None) => writeln!(out, "nothing running")?,
            Err(e) => writeln!(out, "error: {e}")?,
        },
        Command::Map(m) => match session.map(m) {
            Ok(path) => writeln!(out, "wrote {}", path.display())?,
            Err(e) => writeln!(out, "error: {e}")?,
        },
        Command::MapFile(id, m) => match session.mapfile(&id, m) {
            Ok(path) => writeln!(out, "wrote {}", path.display())?,
            Err(e) => writeln!(out, "error: {e}")?,
        },
        Command::Stop => {
            if session.stop() {
                writeln!(out, "stopped")?;
            }
        }
        Command::Quit => {
            match session.quit() {
                Ok(Some(s)) => writeln!(out, "{}", describe(&s))?,
                Ok(None) => {}
                Err(e) => writeln!(out, "error: {e}")?,
            }
            return Ok(false);
        }
        Command::Help => writeln!(out, "{HELP}")?,
    }
    Ok(true)
}

/// Reads commands until `quit` or end of input, which also quits.
pub fn repl(session: &Session, input: impl BufRead, mut out: impl Write) -> std::io::Result<()> {
    let mut lines = input.lines();
    loop {
        for notice in session.take_notices() {
            writeln!(out, "{notice}")?;
        }
        write!(out, "{PROMPT}")?;
        out.flush()?;
        let Some(line) = lines.next() else {
            writeln!(out)?;
            execute(session, Command::Quit, &mut out)?;
            return Ok(());
        };
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                writeln!(out, "error: {e}")?;
                continue;
            }
        };
        match parse_command(&line) {
            Ok(None) => {}
            Ok(Some(cmd)) => {
                if !execute(session, cmd, &mut out)? {
                    return Ok(());
                }
            }
            Err(e) => writeln!(out, "error: {e}")?,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::session::tests::workdir;
    use crate::session::SessionOptions;
    use proptest::prelude::*;
    use vqh_core::sonify::MappingConfig;

    #[test]
    fn grammar() {
        assert_eq!(parse_command("  "), Ok(None));
        assert_eq!(parse_command("runvqe"), Ok(Some(Command::RunVqe)));
        assert_eq!(parse_command(" map  arp "), Ok(Some(Command::Map(Mapping::Arpeggio))));
        assert_eq!(
            parse_command("mapfile 3 additive"),
            Ok(Some(Command::MapFile("3".into(), Mapping::Additive)))
        );
        assert_eq!(parse_command("q"), Ok(Some(Command::Quit)));
        assert!(parse_command("map").is_err());
        assert!(parse_command("map kazoo").is_err());
        assert!(parse_command("runvqe now").is_err());
        assert!(parse_command("mapfile 3").is_err());
        assert!(parse_command("dance").is_err());
    }

    fn open(dir: &std::path::Path) -> Session {
        let opts = SessionOptions {
            mapping: MappingConfig {
                sample_rate: 8000,
                ..Default::default()
            },
            ..Default::default()
        };
        Session::open("S", "local", "basis", dir, opts).unwrap()
    }

    fn transcript(session: &Session, input: &str) -> String {
        let mut out = Vec::new();
        repl(session, input.as_bytes(), &mut out).unwrap();
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn scripted_session() {
        let dir = workdir(9);
        let s = open(dir.path());
        let out = transcript(&s, "help\nrunvqe\nmap additive\nmapfile 0 additive\nmapfile 999 additive\nbogus\nstop\nquit\n");
        assert!(out.starts_with(PROMPT));
        assert!(out.contains("experiment 0000 running"));
        assert!(out.contains("render_0000_additive.wav"));
        assert!(out.contains("error: unknown id 999"));
        assert!(out.contains("error: unknown command \"bogus\""));
        assert!(s.dataset_dir("0000").join("meta.json").is_file());
    }

    #[test]
    fn end_of_input_quits() {
        let dir = workdir(9);
        let out = transcript(&open(dir.path()), "runvqe\n");
        assert!(out.contains("experiment 0000"));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(256))]

        #[test]
        fn parser_never_panics(line in "\\PC{0,40}") {
            let _ = parse_command(&line);
        }

        #[test]
        fn prompt_survives_noise(
            lines in proptest::collection::vec(
                prop_oneof![
                    "\\PC{0,20}",
                    "(map|mapfile|stop|wait|help) [a-z0-9 ]{0,12}",
                ],
                0..6,
            )
        ) {
            let dir = tempfile::tempdir().unwrap();
            let s = open(dir.path());
            let input: String = lines
                .iter()
                .filter(|l| !l.contains('\n') && !l.contains('\r'))
                .map(|l| format!("{l}\n"))
                .collect();
            let out = transcript(&s, &input);
            prop_assert!(out.starts_with(PROMPT));
        }
    }
}
