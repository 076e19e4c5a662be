use proptest::prelude::*;
use std::fs;
use vesicle_cli::config::{parse_config, serialize_config};
use vesicle_cli::output::{read_diagnostics, read_positions, RunManifest, DIAGNOSTICS_HEADER};
use vesicle_cli::{main_with, run_to_dir, Cli, Command, OutputOptions, RunArgs, EXIT_CONFIG, EXIT_IO, EXIT_NUMERICAL};
use vesicle_core::fem::{BoundaryProfile, QuadratureRule};
use vesicle_core::{ScenarioConfig, ScenarioKind};

const SMALL: &str = "\
# a coarse relaxation
N=12
k_a=200
k_rp=0.25
r=1.5
L=30
l=30
mu_in=1
mu_out=1
epsilon=5e-3
dt=5e-3
gamma_dot=1
boundary=rest
t_final=0.05
nx=24
ny=24
alpha=0.8
output_every=5
";

fn args(config: Option<std::path::PathBuf>, out: std::path::PathBuf) -> RunArgs {
    RunArgs {
        config,
        out,
        ..RunArgs::default()
    }
}

#[test]
fn run_writes_every_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = parse_config(SMALL, None, false).unwrap();
    let out = dir.path().join("run");
    let opts = OutputOptions {
        vtk: true,
        no_positions: false,
    };
    let summary = run_to_dir(&cfg, &out, opts).unwrap();
    assert_eq!(summary.records.len(), 3);

    let text = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert_eq!(text.lines().next().unwrap(), DIAGNOSTICS_HEADER);
    let rows = read_diagnostics(&out.join("diagnostics.csv")).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[0].t, 0.0);
    assert!((rows[2].t - 0.05).abs() < 1e-12);
    assert_eq!(rows[0].area_var_pct, 0.0);

    for step in [0, 5, 10] {
        let pos = read_positions(&out.join(format!("positions_{step:05}.csv"))).unwrap();
        assert_eq!(pos.len(), 12);
    }
    let last = read_positions(&out.join("positions_00010.csv")).unwrap();
    let state = summary.records.last().unwrap();
    assert!(state.area > 0.0);
    assert!(last.iter().all(|(x, y)| *x > 0.0 && *x < 30.0 && *y > 0.0 && *y < 30.0));
    // the flow exists only after a solve
    assert!(!out.join("field_00000.vtk").exists());
    let vtk = fs::read_to_string(out.join("field_00010.vtk")).unwrap();
    assert!(vtk.starts_with("# vtk DataFile Version"));

    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("status=complete"));
    assert!(manifest.contains("steps_done=10"));
    assert!(manifest.contains("file=diagnostics.csv"));
    let again = parse_config(&RunManifest::config_text(&manifest), None, false).unwrap();
    assert_eq!(again, cfg);
}

#[test]
fn show_and_run_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.cfg");
    fs::write(&good, SMALL).unwrap();

    let show = Cli {
        command: Command::Show(args(Some(good.clone()), dir.path().join("unused"))),
    };
    assert_eq!(main_with(show), 0);

    let ok = Cli {
        command: Command::Run(RunArgs {
            steps: Some(2),
            ..args(Some(good.clone()), dir.path().join("ok"))
        }),
    };
    assert_eq!(main_with(ok), 0);
    assert!(dir.path().join("ok/diagnostics.csv").exists());

    let missing = Cli {
        command: Command::Run(args(Some(dir.path().join("nope.cfg")), dir.path().join("x"))),
    };
    assert_eq!(main_with(missing), EXIT_CONFIG);

    let bad = dir.path().join("bad.cfg");
    fs::write(&bad, SMALL.replace("k_a=200", "k_a=-1")).unwrap();
    let bad_run = Cli {
        command: Command::Run(args(Some(bad), dir.path().join("y"))),
    };
    assert_eq!(main_with(bad_run), EXIT_CONFIG);

    let conflict = Cli {
        command: Command::Run(RunArgs {
            preset: Some("tt".into()),
            ..args(Some(good.clone()), dir.path().join("z"))
        }),
    };
    assert_eq!(main_with(conflict), EXIT_CONFIG);

    // an existing file where the output directory should go
    let blocker = dir.path().join("blocker");
    fs::write(&blocker, "").unwrap();
    let io = Cli {
        command: Command::Run(args(Some(good), blocker)),
    };
    assert_eq!(main_with(io), EXIT_IO);
}

#[test]
fn numerical_failure_is_reported_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    // a starved Uzawa loop cannot satisfy the contact constraints
    let text = format!("{SMALL}uzawa_max_iter=1\nuzawa_tol=1e-14\n");
    let path = dir.path().join("starved.cfg");
    fs::write(&path, text).unwrap();
    let out = dir.path().join("run");
    let cli = Cli {
        command: Command::Run(args(Some(path), out.clone())),
    };
    assert_eq!(main_with(cli), EXIT_NUMERICAL);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("status=failed"));
    assert!(manifest.contains("stage=step 1: projection"), "{manifest}");
    assert!(manifest.contains("error="));
    // the initial record was written before the failure
    assert_eq!(read_diagnostics(&out.join("diagnostics.csv")).unwrap().len(), 1);
}

fn arb_config() -> impl Strategy<Value = ScenarioConfig> {
    (
        (8usize..80, 1.0f64..1e3, 0.0f64..5.0, 0.5f64..3.0),
        (50.0f64..400.0, 50.0f64..400.0, 0.1f64..30.0, 0.1f64..5.0),
        (1e-4f64..0.05, 1e-4f64..0.01, 0.0f64..3.0, any::<bool>()),
        (10usize..200, 10usize..200, 0.3f64..1.0, -1.5f64..1.5),
        (1usize..50, 0usize..3, 1.0f64..8.0, 0.0f64..10.0),
    )
        .prop_map(|(a, b, c, d, e)| {
            let mut cfg = ScenarioConfig {
                kind: ScenarioKind::Custom,
                n_particles: a.0,
                k_a: a.1,
                k_rp: a.2,
                radius: a.3,
                ell0: 2.0 * a.3,
                length: b.0,
                height: b.1,
                mu_in: b.2,
                mu_out: b.3,
                epsilon: c.0,
                dt: c.1,
                gamma_dot: c.2,
                boundary: if c.3 { BoundaryProfile::LinearShear } else { BoundaryProfile::Rest },
                nx: d.0,
                ny: d.1,
                alpha: d.2,
                init_angle: d.3,
                output_every: e.0,
                quadrature: [QuadratureRule::Gauss3, QuadratureRule::Dunavant7, QuadratureRule::Dunavant7x4][e.1],
                contact_cutoff: e.2,
                t_final: e.3,
                ..ScenarioConfig::default()
            };
            cfg.uzawa_max_iter = 5000;
            cfg
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn serialized_config_parses_back_identically(cfg in arb_config()) {
        let text = serialize_config(&cfg);
        let back = parse_config(&text, None, false).unwrap();
        prop_assert_eq!(back, cfg);
    }
}
