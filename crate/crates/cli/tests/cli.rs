use std::path::Path;
use std::process::Command;

use nalgebra::DMatrix;
use proptest::prelude::*;
use tempfile::TempDir;

use ulrs::Dictionary;
use ulrs_cli::formats::{dictionary_to_string, parse_dictionary, read_dictionary, read_vectors};
use ulrs_cli::{run_cli, EXIT_DATA, EXIT_OK, EXIT_USAGE};

fn run(dir: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["ulrs".to_string()];
    argv.extend(args.iter().map(|a| {
        if a.ends_with(".csv") || a.ends_with(".txt") || a.ends_with(".wav") {
            dir.join(a).to_string_lossy().into_owned()
        } else {
            a.to_string()
        }
    }));
    run_cli(argv)
}

fn speech_features(dir: &Path) {
    assert_eq!(run(dir, &["speech", "--seconds", "20", "--seed", "1", "--out", "train.wav"]), EXIT_OK);
    assert_eq!(run(dir, &["features", "--input", "train.wav", "--train", "--out", "feats.csv"]), EXIT_OK);
}

#[test]
fn learn_writes_a_24_by_100_dictionary() {
    let dir = TempDir::new().unwrap();
    speech_features(dir.path());
    let code = run(
        dir.path(),
        &["learn", "--algo", "ksvd", "--atoms", "100", "--sparsity", "3", "--iters", "30", "--seed", "7", "--input", "feats.csv", "--out", "dict.txt"],
    );
    assert_eq!(code, EXIT_OK);
    let text = std::fs::read_to_string(dir.path().join("dict.txt")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "ULRSDICT 1 24 100");
    assert_eq!(text.lines().count(), 25);
    let dict = read_dictionary(&dir.path().join("dict.txt")).unwrap();
    assert_eq!((dict.n(), dict.k()), (24, 100));
}

#[test]
fn roc_is_byte_identical_across_runs() {
    let dir = TempDir::new().unwrap();
    let args = |out: &'static str| {
        vec!["roc", "--snr-db", "5", "--count", "300", "--seed", "11", "--rule", "sparse", "--gamma", "0.5", "--out", out]
    };
    assert_eq!(run(dir.path(), &args("a.csv")), EXIT_OK);
    assert_eq!(run(dir.path(), &args("b.csv")), EXIT_OK);
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("pf,pd,threshold\n"));
    assert_eq!(text.lines().last().unwrap(), "1,1,-inf");
}

#[test]
fn unknown_flag_exits_1_without_output() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("roc.csv");
    let status = Command::new(env!("CARGO_BIN_EXE_ulrs"))
        .args(["roc", "--no-such-flag", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(EXIT_USAGE));
    assert!(!status.stderr.is_empty());
    assert!(!out.exists());
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn data_errors_exit_2_without_output() {
    let dir = TempDir::new().unwrap();
    std::fs::write(dir.path().join("bad.csv"), "1,2\n3\n").unwrap();
    assert_eq!(run(dir.path(), &["learn", "--atoms", "2", "--input", "bad.csv", "--out", "d.txt"]), EXIT_DATA);
    assert_eq!(run(dir.path(), &["learn", "--atoms", "2", "--input", "missing.csv", "--out", "d.txt"]), EXIT_DATA);
    assert!(!dir.path().join("d.txt").exists());
    assert_eq!(run(dir.path(), &["learn", "--algo", "pca", "--atoms", "2", "--input", "bad.csv", "--out", "d.txt"]), EXIT_USAGE);
}

#[test]
fn detect_calibrates_to_the_requested_false_alarm_rate() {
    let dir = TempDir::new().unwrap();
    let synth = [
        "synth", "--n", "12", "--atoms", "20", "--sparsity", "2", "--count", "2000", "--snr-db", "0", "--seed", "4",
        "--out-h1", "h1.csv", "--out-h0", "h0.csv", "--out-dict", "dict.txt",
    ];
    assert_eq!(run(dir.path(), &synth), EXIT_OK);
    let h0 = read_vectors(&dir.path().join("h0.csv")).unwrap();
    assert_eq!(h0.shape(), (12, 2000));
    // The detector is told the per-entry noise variance measured on H0.
    let sigma_n2 = (h0.norm_squared() / h0.len() as f64).to_string();
    let detect = [
        "detect", "--dict", "dict.txt", "--input", "h0.csv", "--sparsity", "2", "--sigma-n2", &sigma_n2,
        "--alpha", "0.1", "--trials", "20000", "--seed", "3", "--out", "dec.csv",
    ];
    assert_eq!(run(dir.path(), &detect), EXIT_OK);
    let text = std::fs::read_to_string(dir.path().join("dec.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), "frame,t,threshold,decision");
    let alarms = text.lines().skip(1).filter(|l| l.ends_with(",1")).count();
    let pf = alarms as f64 / 2000.0;
    assert!((pf - 0.1).abs() < 0.025, "pf {pf}");
}

#[test]
fn vad_end_to_end() {
    let dir = TempDir::new().unwrap();
    speech_features(dir.path());
    let d = dir.path();
    assert_eq!(run(d, &["learn", "--atoms", "40", "--iters", "10", "--input", "feats.csv", "--out", "dict.txt"]), EXIT_OK);
    assert_eq!(run(d, &["speech", "--seconds", "8", "--seed", "2", "--snr-db", "15", "--out", "test.wav", "--labels", "ref.txt"]), EXIT_OK);
    assert_eq!(run(d, &["noise", "--seconds", "5", "--seed", "3", "--out", "noise.wav"]), EXIT_OK);
    let vad = ["vad", "--dict", "dict.txt", "--input", "test.wav", "--alpha", "0.05", "--noise", "noise.wav", "--ref", "ref.txt", "--out", "dec.csv"];
    assert_eq!(run(d, &vad), EXIT_OK);
    let text = std::fs::read_to_string(d.join("dec.csv")).unwrap();
    let labels = std::fs::read_to_string(d.join("ref.txt")).unwrap();
    assert_eq!(text.lines().count() - 1, labels.lines().count());
    let agree = text
        .lines()
        .skip(1)
        .zip(labels.lines())
        .filter(|(row, label)| row.ends_with(&format!(",{label}")))
        .count();
    assert!(agree as f64 > 0.85 * labels.lines().count() as f64, "{agree}");
    // --alpha without a noise recording is a usage error.
    let missing = ["vad", "--dict", "dict.txt", "--input", "test.wav", "--alpha", "0.05", "--out", "x.csv"];
    assert_eq!(run(d, &missing), EXIT_USAGE);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn dictionary_round_trips_bit_for_bit(
        seed in 0u64..1_000_000,
        n in 1usize..8,
        k in 1usize..12,
        scale in prop_oneof![Just(1.0f64), Just(1e-8), Just(1e8)],
    ) {
        use rand::SeedableRng;
        use rand_distr::{Distribution, StandardNormal};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m = DMatrix::from_fn(n, k, |_, _| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z * scale
        });
        prop_assume!(m.column_iter().all(|c| c.norm() > 0.0));
        let dict = Dictionary::normalized(m).unwrap();
        let back = parse_dictionary(&dictionary_to_string(&dict)).unwrap();
        prop_assert_eq!(back, dict);
    }
}
