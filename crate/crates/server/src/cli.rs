use std::fs;
use std::io::{Read, Write};
use std::net::SocketAddr;
use std::path::PathBuf;

use chrono::DateTime;
use clap::{Args, Parser, Subcommand};
use topiary_core::export::{export, ExportOptions, IdMap};
use topiary_core::lint::{findings_to_csv, lint_with, stats, LintOptions};
use topiary_core::multilang::DisplayLanguageConfig;
use topiary_core::seed::{import_seed, SeedSheet};
use topiary_core::synth::{synthesize, ShapeSpec};
use topiary_core::{parse_ofn, write_taxonomy, Iri, LanguageTag, Project, ProjectId, Taxonomy, UserId};

use crate::auth::UserStore;
use crate::bundle::zip_bundle;
use crate::state::{project_dir, valid_project_id, AppState, Config};

type CliResult = Result<(), Box<dyn std::error::Error>>;

#[derive(Parser)]
#[command(name = "topiary", version, about = "Collaborative interest taxonomy server and tools")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Run the HTTP API.
    Serve {
        #[arg(long, default_value = "data")]
        data: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Directory of the browser app, served at `/`.
        #[arg(long = "static")]
        static_dir: Option<PathBuf>,
        /// Create or reset an account, as `name:password`. Repeatable.
        #[arg(long = "user")]
        users: Vec<String>,
    },
    /// Set a user's password (read from stdin).
    Passwd {
        #[arg(long, default_value = "data")]
        data: PathBuf,
        user: String,
    },
    /// Generate a taxonomy of a given shape, as OFN or as a new project.
    Generate {
        #[command(flatten)]
        shape: ShapeArgs,
        #[arg(long, default_value = "https://example.org/interests/root")]
        root: String,
        /// Write OFN here (stdout when neither this nor --project is set).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Create a project with this id in --data instead.
        #[arg(long)]
        project: Option<String>,
        #[arg(long, default_value = "data")]
        data: PathBuf,
        #[arg(long, default_value = "admin")]
        owner: String,
    },
    /// Class count, verticals, depth and axiom counts of an OFN file.
    Stats { file: PathBuf },
    /// Quality findings for an OFN file.
    Lint {
        file: PathBuf,
        #[arg(long)]
        csv: bool,
        #[arg(long)]
        include_deprecated: bool,
    },
    /// Rewrite an OFN file in canonical form.
    Fmt {
        file: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Relational export bundle (zip) of an OFN file.
    Export {
        file: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        no_ads: bool,
        #[arg(long)]
        deprecated: bool,
    },
    /// Build an OFN taxonomy from a level1,level2,level3 seed sheet.
    ImportSeed {
        sheet: PathBuf,
        #[arg(long, default_value = "https://example.org/interests/root")]
        root: String,
        #[arg(long, default_value = "en")]
        lang: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
pub struct ShapeArgs {
    /// Classes excluding the root.
    #[arg(long, default_value_t = 11_000)]
    pub classes: usize,
    #[arg(long, default_value_t = 24)]
    pub verticals: usize,
    #[arg(long, default_value_t = 12)]
    pub depth: usize,
    #[arg(long, default_value_t = 2017)]
    pub seed: u64,
}

fn ontology_iri(root: &Iri) -> Iri {
    Iri::parse(root.namespace().trim_end_matches(['/', '#'])).unwrap_or_else(|_| root.clone())
}

fn read_taxonomy(path: &PathBuf) -> Result<Taxonomy, Box<dyn std::error::Error>> {
    let text = fs::read_to_string(path)?;
    Ok(parse_ofn(&text)?.to_taxonomy(None)?)
}

fn write_out(out: Option<&PathBuf>, bytes: &[u8]) -> std::io::Result<()> {
    match out {
        Some(p) => fs::write(p, bytes),
        None => std::io::stdout().write_all(bytes),
    }
}

fn parse_user(spec: &str) -> Result<(UserId, &str), String> {
    let (name, pass) = spec.split_once(':').ok_or_else(|| format!("--user expects name:password, got {spec}"))?;
    if name.is_empty() || pass.is_empty() {
        return Err("--user needs a non-empty name and password".into());
    }
    Ok((UserId::new(name), pass))
}

pub async fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Serve { data, bind, static_dir, users } => {
            let config = Config { data_dir: Some(data), static_dir, ..Config::default() };
            let state = AppState::load(config)?;
            for spec in &users {
                let (name, pass) = parse_user(spec)?;
                state.users.set_password(&name, pass)?;
            }
            let listener = tokio::net::TcpListener::bind(bind).await?;
            tracing::info!("listening on http://{}", listener.local_addr()?);
            crate::serve(state, listener).await?;
        }
        Command::Passwd { data, user } => {
            fs::create_dir_all(&data)?;
            let store = UserStore::load(Some(data.join("users.json")))?;
            let mut password = String::new();
            std::io::stdin().read_to_string(&mut password)?;
            let password = password.trim_end_matches(['\r', '\n']);
            if password.is_empty() {
                return Err("empty password".into());
            }
            store.set_password(&UserId::new(user), password)?;
        }
        Command::Generate { shape, root, out, project, data, owner } => {
            let root = Iri::parse(&root)?;
            let spec = ShapeSpec::small(shape.classes, shape.verticals, shape.depth, shape.seed);
            let changes = synthesize(&root, &spec).ok_or("shape is infeasible: need classes >= verticals + depth - 1")?;
            match project {
                Some(id) => {
                    if !valid_project_id(&id) {
                        return Err("project id must be 1-64 characters of [A-Za-z0-9_-]".into());
                    }
                    let id = ProjectId::new(id);
                    let owner = UserId::new(owner);
                    let mut p = Project::create_in(project_dir(&data, &id), id.clone(), id.as_str(), root, owner.clone())?;
                    let rev = p.commit(&owner, changes, "Generated taxonomy")?;
                    eprintln!("created project {id} at revision {}", rev.number);
                }
                None => {
                    let mut tax = Taxonomy::new(root.clone());
                    for c in &changes {
                        tax.apply(c)?;
                    }
                    write_out(out.as_ref(), write_taxonomy(&tax, &ontology_iri(&root)).as_bytes())?;
                }
            }
        }
        Command::Stats { file } => {
            let s = stats(&read_taxonomy(&file)?)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
        }
        Command::Lint { file, csv, include_deprecated } => {
            let findings = lint_with(&read_taxonomy(&file)?, LintOptions { include_deprecated });
            if csv {
                print!("{}", findings_to_csv(&findings));
            } else {
                println!("{}", serde_json::to_string_pretty(&findings)?);
            }
        }
        Command::Fmt { file, out } => {
            let tax = read_taxonomy(&file)?;
            write_out(out.as_ref(), write_taxonomy(&tax, &ontology_iri(tax.root())).as_bytes())?;
        }
        Command::Export { file, out, no_ads, deprecated } => {
            let tax = read_taxonomy(&file)?;
            let opts = ExportOptions { include_no_ads: no_ads, include_deprecated: deprecated };
            let bundle = export(&tax, 0, DateTime::UNIX_EPOCH, opts, &mut IdMap::default(), &DisplayLanguageConfig::default())?;
            fs::write(&out, zip_bundle(&bundle))?;
            eprintln!("{} interests, {} synonyms, {} closure rows", bundle.interests.len(), bundle.synonyms.len(), bundle.closure.len());
        }
        Command::ImportSeed { sheet, root, lang, out } => {
            let root = Iri::parse(&root)?;
            let sheet = SeedSheet::from_csv(&fs::read_to_string(sheet)?)?;
            let changes = import_seed(&sheet, &root, &LanguageTag::parse(&lang)?)?;
            let mut tax = Taxonomy::new(root.clone());
            for c in &changes {
                tax.apply(c)?;
            }
            write_out(out.as_ref(), write_taxonomy(&tax, &ontology_iri(&root)).as_bytes())?;
        }
    }
    Ok(())
}
