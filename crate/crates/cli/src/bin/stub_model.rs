//! A stand-in model endpoint speaking the line protocol on stdin/stdout (or
//! a TCP socket), backed by a script file or a toy lexicon.

use std::io::{self, BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::Parser;

use simt::corpus::ToyLexicon;
use simt::gateway::wire::serve;
use simt::gateway::{CandidateSet, ScriptedModel, ToyModel, TranslateRequest, Translator};
use simt::policy::BoundaryClassifier;
use simt::{Error, Result};

#[derive(Parser)]
#[command(name = "simt-stub-model")]
struct Cli {
    /// Scripted answers (translations and boundary scores).
    #[arg(long, conflicts_with = "toy", required_unless_present = "toy")]
    script: Option<PathBuf>,

    /// Toy lexicon to translate with.
    #[arg(long)]
    toy: Option<PathBuf>,

    /// Return a variant second candidate (toy only).
    #[arg(long)]
    variants: bool,

    /// Answer any request whose source contains this token with a
    /// non-JSON line.
    #[arg(long)]
    garbage_on: Option<String>,

    /// Answer translate requests whose source contains this token with a
    /// protocol error.
    #[arg(long)]
    fail_on: Option<String>,

    /// Listen on this address instead of stdin/stdout. Prints the bound
    /// address on the first stdout line.
    #[arg(long)]
    tcp: Option<String>,
}

struct FailOn<T> {
    inner: T,
    token: Option<String>,
}

impl<T: Translator> Translator for FailOn<T> {
    fn translate(&self, request: &TranslateRequest) -> Result<CandidateSet> {
        if let Some(tok) = &self.token {
            if request.src.contains(tok) {
                return Err(Error::Config(format!("refusing source containing {tok:?}")));
            }
        }
        self.inner.translate(request)
    }
}

struct Endpoint {
    translator: Box<dyn Translator>,
    classifier: Option<Arc<ScriptedModel>>,
    garbage_on: Option<String>,
}

impl Endpoint {
    fn run(&self, input: impl BufRead, mut output: impl Write) -> io::Result<()> {
        let classifier = self.classifier.as_deref().map(|c| c as &dyn BoundaryClassifier);
        for line in input.lines() {
            let line = line?;
            if let Some(tok) = &self.garbage_on {
                if line.contains(&format!("\"{tok}\"")) {
                    writeln!(output, "this is not json")?;
                    output.flush()?;
                    continue;
                }
            }
            serve(line.as_bytes(), &mut output, Some(self.translator.as_ref()), classifier)?;
            output.flush()?;
        }
        Ok(())
    }
}

fn build(cli: &Cli) -> Result<Endpoint> {
    let (translator, classifier): (Box<dyn Translator>, _) = match (&cli.script, &cli.toy) {
        (Some(path), _) => {
            let model = Arc::new(ScriptedModel::load(path)?);
            (Box::new(FailOn { inner: Arc::clone(&model), token: cli.fail_on.clone() }), Some(model))
        }
        (None, Some(path)) => {
            let model = ToyModel::new(ToyLexicon::load(path)?, cli.variants)?;
            (Box::new(FailOn { inner: model, token: cli.fail_on.clone() }), None)
        }
        (None, None) => unreachable!("clap requires one model source"),
    };
    Ok(Endpoint {
        translator,
        classifier,
        garbage_on: cli.garbage_on.clone(),
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let endpoint = match build(&cli) {
        Ok(e) => Arc::new(e),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };

    let result = match &cli.tcp {
        None => endpoint.run(io::stdin().lock(), io::stdout().lock()),
        Some(addr) => (|| {
            let listener = TcpListener::bind(addr)?;
            println!("{}", listener.local_addr()?);
            io::stdout().flush()?;
            for stream in listener.incoming() {
                let stream = stream?;
                let endpoint = Arc::clone(&endpoint);
                std::thread::spawn(move || {
                    let reader = BufReader::new(stream.try_clone()?);
                    endpoint.run(reader, stream)
                });
            }
            Ok(())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
