use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{ArgAction, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Map, Value};

use plaingroups::abelian::{exponent_matrix, smith_normal_form, torsion_free_rank};
use plaingroups::decider::{
    build_certificate, decide_analyzed, parse_transcripts, ChallengeSampler, DeciderError, Evidence, ExistResponse,
    ExistWitness, SideAnalysis, UniversalChallenge, Verdict, Verifier, Violation,
};
use plaingroups::genpresent::{corpus, gen_system, ground_truth_iso, PlainSpec};
use plaingroups::subgroups::{Torsion, DEFAULT_CONJUGATOR_BALL_CAP};
use plaingroups::{Ball, OrderResult, RewritingSystem, SubgroupError, ValidationError, Word};

const EXIT_NO: u8 = 1;
const EXIT_MALFORMED: u8 = 2;
const EXIT_PLAINNESS: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Parser, Debug)]
#[command(name = "plaingroups", version, about = "Plain groups from convergent rewriting systems")]
struct Cli {
    /// Emit one JSON object instead of `key: value` lines.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for the randomized subcommands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// More log output on stderr (repeatable).
    #[arg(short = 'v', long = "verbose", global = true, action = ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Check that a system is convergent and inverse-closed.
    Validate { system: PathBuf },
    /// Normal form of a word.
    Reduce {
        system: PathBuf,
        #[arg(short, long, allow_hyphen_values = true)]
        word: String,
    },
    /// Whether two words spell the same element.
    Wp { system: PathBuf, left: String, right: String },
    /// Order of the element a word spells.
    Order {
        system: PathBuf,
        #[arg(short, long)]
        word: String,
    },
    /// Size of the Cayley ball of radius R.
    Ball {
        system: PathBuf,
        #[arg(short, long, value_parser = clap::value_parser!(u32).range(0..))]
        radius: u32,
        #[arg(long, default_value_t = plaingroups::balls::DEFAULT_BALL_CAP, value_parser = positive)]
        cap: usize,
        /// List the elements, too.
        #[arg(long)]
        list: bool,
    },
    /// Torsion-free rank of the abelianization.
    Rank { system: PathBuf },
    /// Conjugacy classes of maximal finite subgroups.
    Subgroups {
        system: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CONJUGATOR_BALL_CAP, value_parser = positive)]
        conj_cap: usize,
    },
    /// Decide whether two systems present isomorphic groups.
    Check {
        g: PathBuf,
        h: PathBuf,
        /// Write a certificate (isomorphic pairs only).
        #[arg(long)]
        emit_cert: Option<PathBuf>,
        /// Sampled transcripts recorded in the certificate.
        #[arg(long, default_value_t = 2)]
        transcripts: usize,
    },
    /// Run the certificate predicate on one challenge and response, or on
    /// every transcript recorded in the certificate.
    Verify {
        g: PathBuf,
        h: PathBuf,
        #[arg(long)]
        cert: PathBuf,
        #[arg(long, requires = "response")]
        challenge: Option<PathBuf>,
        #[arg(long, requires = "challenge")]
        response: Option<PathBuf>,
    },
    /// Generate a system from a `.fp` specification.
    Gen {
        spec: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the property suites on a generated corpus.
    Selftest {
        #[arg(long, default_value_t = 20, value_parser = positive)]
        cases: usize,
    },
}

fn positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("must be positive".into()),
        Ok(n) => Ok(n),
        Err(e) => Err(e.to_string()),
    }
}

/// A failed run: exit code and message.
#[derive(Debug)]
struct Failure(u8, String);

fn malformed(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_MALFORMED, e.to_string())
}

fn plainness(e: impl std::fmt::Display) -> Failure {
    Failure(EXIT_PLAINNESS, e.to_string())
}

fn subgroup_failure(e: SubgroupError) -> Failure {
    match e {
        SubgroupError::Ball(b) => malformed(b),
        e => plainness(e),
    }
}

fn decider_failure(e: DeciderError) -> Failure {
    match e {
        DeciderError::Subgroup(s) => subgroup_failure(s),
        e => plainness(e),
    }
}

/// Ordered `key: value` output.
#[derive(Default)]
struct Report {
    fields: Vec<(String, Value)>,
}

impl Report {
    fn put(&mut self, key: &str, value: impl Into<Value>) -> &mut Self {
        self.fields.push((key.to_string(), value.into()));
        self
    }

    fn render(&self, as_json: bool) -> String {
        if as_json {
            let map: Map<String, Value> = self.fields.iter().cloned().collect();
            return format!("{}\n", Value::Object(map));
        }
        let mut out = String::new();
        for (k, v) in &self.fields {
            match v {
                Value::Array(items) => {
                    for item in items {
                        out.push_str(&format!("{k}: {}\n", inline(item)));
                    }
                }
                v => out.push_str(&format!("{k}: {}\n", inline(v))),
            }
        }
        out
    }
}

fn inline(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Bool(b) => if *b { "yes" } else { "no" }.to_string(),
        Value::Array(items) => items.iter().map(inline).collect::<Vec<_>>().join(", "),
        Value::Object(m) => m.iter().map(|(k, v)| format!("{k} {}", inline(v))).collect::<Vec<_>>().join("; "),
        v => v.to_string(),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| malformed(format!("{}: {e}", path.display())))
}

fn load(path: &Path) -> Result<RewritingSystem, Failure> {
    let mut rs = RewritingSystem::parse(&read(path)?).map_err(|e| malformed(format!("{}: {e}", path.display())))?;
    rs.validate().map_err(|e| plainness(format!("{}: {e}", path.display())))?;
    Ok(rs)
}

fn word(rs: &RewritingSystem, text: &str) -> Result<Word, Failure> {
    rs.parse_word(text).map_err(malformed)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).parse_default_env().init();

    let mut report = Report::default();
    let outcome = run(&cli, &mut report);
    print!("{}", report.render(cli.json));
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(Failure(code, message)) => {
            eprintln!("error: {message}");
            ExitCode::from(code)
        }
    }
}

fn run(cli: &Cli, out: &mut Report) -> Result<u8, Failure> {
    match &cli.cmd {
        Cmd::Validate { system } => validate(system, out),
        Cmd::Reduce { system, word: w } => {
            let rs = load(system)?;
            let nf = rs.reduce(&word(&rs, w)?);
            out.put("normal_form", rs.show(&nf)).put("length", nf.len());
            Ok(0)
        }
        Cmd::Wp { system, left, right } => {
            let rs = load(system)?;
            let (u, v) = (rs.reduce(&word(&rs, left)?), rs.reduce(&word(&rs, right)?));
            out.put("left", rs.show(&u)).put("right", rs.show(&v)).put("equal", u == v);
            Ok(0)
        }
        Cmd::Order { system, word: w } => {
            let rs = load(system)?;
            let w = word(&rs, w)?;
            let order = plaingroups::has_finite_order(&rs, &w).map_err(malformed)?;
            out.put("normal_form", rs.show(&rs.reduce(&w)));
            match order {
                OrderResult::Finite(k) => out.put("order", k),
                OrderResult::Infinite => out.put("order", "infinite"),
            };
            Ok(0)
        }
        Cmd::Ball { system, radius, cap, list } => {
            let rs = load(system)?;
            let b = Ball::build(&rs, *radius as usize, *cap).map_err(malformed)?;
            out.put("radius", *radius).put("size", b.len());
            let spheres: Vec<Value> = (0..=*radius as usize).map(|k| json!(b.sphere(k).len())).collect();
            out.put("sphere_sizes", Value::String(spheres.iter().map(inline).collect::<Vec<_>>().join(" ")));
            if *list {
                out.put("element", b.elements().iter().map(|w| Value::from(rs.show(w))).collect::<Vec<_>>());
            }
            Ok(0)
        }
        Cmd::Rank { system } => {
            let rs = load(system)?;
            let m = exponent_matrix(&rs);
            let snf = smith_normal_form(&m.rows, m.cols());
            let diag: Vec<String> = snf.diag.iter().map(|d| d.to_string()).collect();
            out.put("rank", torsion_free_rank(&rs)).put("generators", m.cols()).put("snf_diagonal", diag.join(" "));
            Ok(0)
        }
        Cmd::Subgroups { system, conj_cap } => subgroups(system, *conj_cap, out),
        Cmd::Check { g, h, emit_cert, transcripts } => check(g, h, emit_cert.as_deref(), *transcripts, cli.seed, out),
        Cmd::Verify { g, h, cert, challenge, response } => {
            verify(g, h, cert, challenge.as_deref().zip(response.as_deref()), out)
        }
        Cmd::Gen { spec, output } => {
            let spec = PlainSpec::parse(&read(spec)?).map_err(malformed)?;
            let rs = gen_system(&spec).map_err(malformed)?;
            let text = rs.to_lrs();
            out.put("letters", rs.alphabet_len()).put("rules", rs.rules().len()).put("n_t", rs.size_n());
            fs::write(output, &text).map_err(|e| malformed(format!("{}: {e}", output.display())))?;
            out.put("output", output.display().to_string());
            Ok(0)
        }
        Cmd::Selftest { cases } => selftest(*cases, cli.seed, out),
    }
}

fn validate(path: &Path, out: &mut Report) -> Result<u8, Failure> {
    let mut rs = RewritingSystem::parse(&read(path)?).map_err(|e| malformed(format!("{}: {e}", path.display())))?;
    out.put("letters", rs.alphabet_len())
        .put("rules", rs.rules().len())
        .put("n_t", rs.size_n())
        .put("r_t", rs.max_rhs());
    match rs.validate() {
        Ok(report) => {
            out.put("critical_pairs", report.pairs.len()).put("valid", true);
            Ok(0)
        }
        Err(e) => {
            let reason = match &e {
                ValidationError::NonConfluent { pair } => format!(
                    "critical pair on `{}` (rules {} and {}) does not join: `{}` vs `{}`",
                    rs.show(&pair.word),
                    pair.rules.0 + 1,
                    pair.rules.1 + 1,
                    rs.show(&pair.left_nf),
                    rs.show(&pair.right_nf)
                ),
                e => e.to_string(),
            };
            out.put("valid", false).put("reason", reason);
            Ok(EXIT_PLAINNESS)
        }
    }
}

fn subgroups(path: &Path, conj_cap: usize, out: &mut Report) -> Result<u8, Failure> {
    let rs = load(path)?;
    let torsion = Torsion::new(&rs).map_err(subgroup_failure)?;
    let subs = torsion.enumerate_maximal().map_err(subgroup_failure)?;
    let classification = torsion.conjugacy_classes(&subs, conj_cap).map_err(subgroup_failure)?;
    let strategy = match classification.strategy {
        plaingroups::subgroups::ClassStrategy::Exhaustive => "exhaustive",
        plaingroups::subgroups::ClassStrategy::LetterGraph => "letter_graph",
    };
    out.put("ball_size", torsion.ball().len())
        .put("ball_subgroups", subs.len())
        .put("classes", classification.classes.len())
        .put("strategy", strategy);
    let classes: Vec<Value> = classification
        .classes
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let gens: Vec<String> = c.representative.gens().iter().map(|g| rs.show(g)).collect();
            let conj: Vec<String> = c.members.iter().map(|(_, t)| rs.show(t)).collect();
            let mut m = Map::new();
            m.insert("index".into(), json!(i + 1));
            m.insert("order".into(), json!(c.representative.order()));
            m.insert("generators".into(), json!(gens));
            m.insert("members".into(), json!(c.members.len()));
            m.insert("conjugators".into(), json!(conj));
            Value::Object(m)
        })
        .collect();
    out.put("class", classes);
    Ok(0)
}

fn check(
    g_path: &Path,
    h_path: &Path,
    emit: Option<&Path>,
    transcripts: usize,
    seed: u64,
    out: &mut Report,
) -> Result<u8, Failure> {
    let (g, h) = (load(g_path)?, load(h_path)?);
    let (rg, rh) = (torsion_free_rank(&g), torsion_free_rank(&h));
    if rg != rh {
        let v = Violation::RankMismatch { g: rg, h: rh };
        out.put("isomorphic", false).put("violated", v.condition()).put("detail", format!("ranks {rg} vs {rh}"));
        if emit.is_some() {
            out.put("certificate", "none");
        }
        return Ok(EXIT_NO);
    }
    let ga = SideAnalysis::new(&g).map_err(decider_failure)?;
    let ha = SideAnalysis::new(&h).map_err(decider_failure)?;
    let d = decide_analyzed(&ga, &ha);
    out.put("isomorphic", d.isomorphic);
    match &d.evidence {
        Evidence::NotIsomorphic(v) => {
            let detail = match v {
                Violation::RankMismatch { g, h } => format!("ranks {g} vs {h}"),
                Violation::ClassCountMismatch { g, h } => format!("{g} vs {h} classes of maximal finite subgroups"),
                Violation::NoFactorMatching { g_class, g_order, g_orders, h_orders } => format!(
                    "class {} (order {g_order}) has no isomorphic partner; orders {g_orders:?} vs {h_orders:?}",
                    g_class + 1
                ),
            };
            out.put("violated", v.condition()).put("detail", detail);
            if emit.is_some() {
                out.put("certificate", "none");
            }
            Ok(EXIT_NO)
        }
        Evidence::Isomorphic(m) => {
            out.put("rank", m.rank).put("p", m.pairs.len());
            let pairs: Vec<Value> = m
                .pairs
                .iter()
                .map(|p| {
                    let a: Vec<String> = p.a.iter().map(|w| g.show(w)).collect();
                    let b: Vec<String> = p.b.iter().map(|w| h.show(w)).collect();
                    Value::String(format!(
                        "{} -> {} order {} [{}] -> [{}]",
                        p.g_class + 1,
                        p.h_class + 1,
                        p.order,
                        a.join(", "),
                        b.join(", ")
                    ))
                })
                .collect();
            out.put("pair", pairs);
            if let Some(path) = emit {
                let cert = build_certificate(&ga, &ha, &d).map_err(decider_failure)?;
                let v = Verifier::new(&g, &h).map_err(malformed)?;
                let sampler = ChallengeSampler::new(&v, &cert.witness);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let recorded: Vec<(UniversalChallenge, ExistResponse)> = (0..transcripts)
                    .map(|_| {
                        let y = sampler.sample(&mut rng);
                        let z = cert.respond(&y);
                        (y, z)
                    })
                    .collect();
                fs::write(path, cert.to_text(&recorded)).map_err(|e| malformed(format!("{}: {e}", path.display())))?;
                out.put("certificate", path.display().to_string()).put("seed", seed);
            }
            Ok(0)
        }
    }
}

fn verify(
    g_path: &Path,
    h_path: &Path,
    cert: &Path,
    single: Option<(&Path, &Path)>,
    out: &mut Report,
) -> Result<u8, Failure> {
    let (g, h) = (load(g_path)?, load(h_path)?);
    let cert_text = read(cert)?;
    let x = ExistWitness::parse(&cert_text, &g, &h).map_err(|e| malformed(format!("{}: {e}", cert.display())))?;
    let runs = match single {
        Some((yc, zc)) => {
            let y = UniversalChallenge::parse(&read(yc)?, &g, &h)
                .map_err(|e| malformed(format!("{}: {e}", yc.display())))?;
            let z = ExistResponse::parse(&read(zc)?, &g, &h).map_err(|e| malformed(format!("{}: {e}", zc.display())))?;
            vec![(y, z)]
        }
        None => parse_transcripts(&cert_text, &g, &h).map_err(|e| malformed(format!("{}: {e}", cert.display())))?,
    };
    let v = Verifier::new(&g, &h).map_err(malformed)?;
    out.put("p", x.p()).put("transcripts", runs.len());
    let mut code = 0;
    let mut verdicts = Vec::new();
    for (y, z) in &runs {
        let (text, c) = match v.verify(&x, y, z) {
            Verdict::Accepted => ("accepted".to_string(), 0),
            Verdict::Rejected(step) => (format!("rejected at {}", step.name()), EXIT_NO),
            Verdict::MalformedChallenge(m) => (format!("malformed challenge: {m}"), EXIT_MALFORMED),
            Verdict::MalformedResponse(m) => (format!("malformed response: {m}"), EXIT_MALFORMED),
        };
        verdicts.push(Value::String(text));
        code = code.max(c);
    }
    if runs.is_empty() {
        // no transcript: only the witness-level steps can run
        match v.check_witness(&x) {
            Ok(()) => verdicts.push(Value::from("witness accepted")),
            Err(step) => {
                verdicts.push(Value::String(format!("rejected at {}", step.name())));
                code = EXIT_NO;
            }
        }
    }
    out.put("verdict", verdicts);
    Ok(code)
}

fn selftest(cases: usize, seed: u64, out: &mut Report) -> Result<u8, Failure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    out.put("seed", seed).put("cases", cases);
    let pairs = corpus(&mut rng, cases, 2, 2);
    let mut failures = 0usize;
    let mut suite = |name: &str, checks: usize, failed: usize, out: &mut Report| {
        failures += failed;
        let status = if failed == 0 { "pass".to_string() } else { format!("FAIL ({failed} of {checks})") };
        out.put(name, format!("{status} ({checks} checks)"));
    };

    // rewriting laws on random words
    let (mut n, mut bad) = (0, 0);
    for (a, _, _) in &pairs {
        let rs = gen_system(a).map_err(malformed)?;
        for _ in 0..50 {
            let len = rng.gen_range(0..20);
            let w: Word = (0..len).map(|_| plaingroups::Letter(rng.gen_range(0..rs.alphabet_len() as u32))).collect();
            let nf = rs.reduce(&w);
            let ok = rs.reduce(&nf) == nf
                && rs.multiply(&w, &rs.formal_inverse(&w)).is_empty()
                && nf.len() <= w.len()
                && rs.reduce_random(&w, &mut rng) == nf;
            n += 1;
            bad += usize::from(!ok);
        }
    }
    suite("rewriting", n, bad, out);

    // Smith forms of random small matrices
    let (mut n, mut bad) = (0, 0);
    for _ in 0..cases * 10 {
        let (r, c) = (rng.gen_range(0..5), rng.gen_range(0..5));
        let m: Vec<Vec<i64>> = (0..r).map(|_| (0..c).map(|_| rng.gen_range(-6..=6)).collect()).collect();
        n += 1;
        bad += usize::from(!smith_normal_form(&m, c).certifies(&m, c));
    }
    suite("smith_form", n, bad, out);

    // ranks and class counts of generated systems
    let (mut n, mut bad) = (0, 0);
    for (a, _, _) in &pairs {
        let rs = gen_system(a).map_err(malformed)?;
        let side = SideAnalysis::new(&rs).map_err(decider_failure)?;
        n += 1;
        bad += usize::from(side.rank != a.free_rank || side.class_count() != a.factors.len());
    }
    suite("structure", n, bad, out);

    // decisions against the table-level oracle, with certificate round trips
    let (mut n, mut bad) = (0, 0);
    let (mut rn, mut rbad) = (0, 0);
    for (a, b, _) in &pairs {
        let (g, h) = (gen_system(a).map_err(malformed)?, gen_system(b).map_err(malformed)?);
        let ga = SideAnalysis::new(&g).map_err(decider_failure)?;
        let ha = SideAnalysis::new(&h).map_err(decider_failure)?;
        let d = decide_analyzed(&ga, &ha);
        n += 1;
        bad += usize::from(d.isomorphic != ground_truth_iso(a, b));
        if d.isomorphic {
            let cert = build_certificate(&ga, &ha, &d).map_err(decider_failure)?;
            let v = Verifier::new(&g, &h).map_err(malformed)?;
            let sampler = ChallengeSampler::new(&v, &cert.witness);
            for _ in 0..20 {
                let y = sampler.sample(&mut rng);
                rn += 1;
                rbad += usize::from(!v.verify(&cert.witness, &y, &cert.respond(&y)).is_accepted());
            }
        }
    }
    suite("decider", n, bad, out);
    suite("certificates", rn, rbad, out);
    Ok(if failures == 0 { 0 } else { EXIT_NO })
}
