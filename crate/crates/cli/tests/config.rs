use std::fs;
use std::path::Path;

use debond_cli::config::{DataSpec, FrontSpec, Geometry, Numerics, Outputs, Physics, ProfileSpec, ToughnessPiece};
use debond_cli::{load_config, CliError, RunConfig};
use proptest::prelude::*;

const MINIMAL: &str = r#"
[geometry]
outer_radius = 3.0
initial_width = 1.0

[physics]
alpha = 1.0
horizon = 0.5

[data]
w = { kind = "zero" }
v0 = { kind = "sine_bump", amplitude = 0.2, start = 0.2, end = 0.8 }
v1 = { kind = "zero" }

[front]
kind = "static"
"#;

fn write(dir: &Path, text: &str) -> std::path::PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

fn load_text(text: &str) -> Result<RunConfig, CliError> {
    let dir = tempfile::tempdir().unwrap();
    load_config(&write(dir.path(), text))
}

fn scenarios() -> Vec<std::path::PathBuf> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let mut v: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().path()).collect();
    v.sort();
    v
}

#[test]
fn minimal_file_loads_with_defaults() {
    let cfg = load_text(MINIMAL).unwrap();
    assert_eq!(cfg.numerics, Numerics::default());
    assert_eq!(cfg.outputs, Outputs::default());
    assert_eq!(cfg.front, FrontSpec::Static {});
    assert_eq!(cfg.snapshot_times(), vec![0.0, 0.5]);
}

#[test]
fn unknown_keys_are_rejected() {
    let top = format!("colour = 3\n{MINIMAL}");
    assert!(matches!(load_text(&top), Err(CliError::Config(_))));
    let nested = MINIMAL.replace("alpha = 1.0", "alpha = 1.0\nbeta = 2.0");
    assert!(matches!(load_text(&nested), Err(CliError::Config(_))));
    let profile = MINIMAL.replace(r#"w = { kind = "zero" }"#, r#"w = { kind = "zero", value = 1.0 }"#);
    assert!(matches!(load_text(&profile), Err(CliError::Config(_))));
}

#[test]
fn incompatible_rim_data_is_rejected() {
    let text = MINIMAL.replace(r#"w = { kind = "zero" }"#, r#"w = { kind = "constant", value = 1.0 }"#);
    let err = load_text(&text).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn supersonic_front_is_rejected() {
    let text = MINIMAL.replace(r#"kind = "static""#, r#"kind = "linear"
speed = 1.0"#);
    assert!(matches!(load_text(&text), Err(CliError::Config(_))));
    let ok = MINIMAL.replace(r#"kind = "static""#, r#"kind = "linear"
speed = 0.5"#);
    assert!(load_text(&ok).is_ok());
}

#[test]
fn griffith_front_needs_toughness() {
    let text = MINIMAL.replace(r#"kind = "static""#, r#"kind = "griffith""#);
    assert!(matches!(load_text(&text), Err(CliError::Config(_))));
}

#[test]
fn table_paths_resolve_next_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("v0.csv"), "x,y\n0.0,0.0\n0.5,0.1\n1.0,0.0\n").unwrap();
    let text = MINIMAL.replace(
        r#"v0 = { kind = "sine_bump", amplitude = 0.2, start = 0.2, end = 0.8 }"#,
        r#"v0 = { kind = "table", path = "v0.csv" }"#,
    );
    let cfg = load_config(&write(dir.path(), &text)).unwrap();
    let data = cfg.problem().unwrap();
    assert!((data.v0.value(0.5) - 0.1).abs() < 1e-14);
    let ProfileSpec::Table { path } = &cfg.data.v0 else { panic!() };
    assert!(path.is_absolute());
}

#[test]
fn bundled_scenarios_round_trip() {
    for path in scenarios() {
        let cfg = load_config(&path).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let again = load_config(&write(dir.path(), &cfg.to_toml().unwrap())).unwrap();
        assert_eq!(cfg, again, "{}", path.display());
    }
}

fn profile() -> impl Strategy<Value = ProfileSpec> {
    prop_oneof![
        Just(ProfileSpec::Zero {}),
        any::<f64>().prop_filter("finite", |x| x.is_finite()).prop_map(|value| ProfileSpec::Constant { value }),
        (-1e3f64..1e3, -1e3f64..1e3).prop_map(|(offset, slope)| ProfileSpec::Affine { offset, slope }),
        (0.0f64..1.0, 0.0f64..1.0, 1.0f64..2.0)
            .prop_map(|(amplitude, start, end)| ProfileSpec::SineBump { amplitude, start, end }),
        prop::collection::vec(-10.0f64..10.0, 0..4).prop_map(|coefficients| ProfileSpec::Polynomial { coefficients }),
    ]
}

fn front() -> impl Strategy<Value = FrontSpec> {
    prop_oneof![
        Just(FrontSpec::Griffith {}),
        Just(FrontSpec::Static {}),
        (0.0f64..1.0).prop_map(|speed| FrontSpec::Linear { speed }),
        prop::collection::vec((0.0f64..5.0, 0.0f64..3.0), 1..5)
            .prop_map(|k| FrontSpec::Knots { knots: k.into_iter().map(|(t, r)| [t, r]).collect() }),
    ]
}

fn config() -> impl Strategy<Value = RunConfig> {
    (
        (1.5f64..10.0, 0.1f64..1.0, 0.0f64..3.0, 0.0f64..10.0),
        (profile(), profile(), profile()),
        prop::collection::vec((0.0f64..3.0, profile()), 0..3),
        front(),
        (1e-4f64..0.5, 1e-14f64..1e-6, 1usize..1000, 0.1f64..1.9, prop::option::of(0.01f64..0.5)),
        (prop::option::of("[a-z]{1,8}"), prop::collection::vec(0.0f64..10.0, 0..4), 2usize..200, any::<bool>()),
    )
        .prop_map(|(g, data, tough, front, n, out)| RunConfig {
            name: out.0.clone(),
            geometry: Geometry {
                outer_radius: g.0,
                initial_width: g.1,
            },
            physics: Physics {
                alpha: g.2,
                horizon: g.3,
            },
            data: DataSpec {
                w: data.0,
                v0: data.1,
                v1: data.2,
            },
            toughness: tough.into_iter().map(|(start, profile)| ToughnessPiece { start, profile }).collect(),
            front,
            numerics: Numerics {
                dt: n.0,
                tol: n.1,
                max_iter: n.2,
                window_multiplier: n.3,
                stop_margin: n.4,
            },
            outputs: Outputs {
                directory: out.0.map(Into::into),
                snapshot_times: out.1,
                snapshot_points: out.2,
                plot: out.3,
            },
        })
}

proptest! {
    #[test]
    fn serialization_round_trips(cfg in config()) {
        let text = cfg.to_toml().unwrap();
        prop_assert_eq!(RunConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn valid_configs_survive_load(amp in 0.0f64..0.5, start in 0.0f64..0.5, width in 0.1f64..0.5,
                                  alpha in 0.0f64..2.0, speed in 0.0f64..0.9, dt_pow in 4i32..8) {
        let cfg = RunConfig {
            name: None,
            geometry: Geometry { outer_radius: 3.0, initial_width: 1.0 },
            physics: Physics { alpha, horizon: 1.0 },
            data: DataSpec {
                w: ProfileSpec::Zero {},
                v0: ProfileSpec::SineBump { amplitude: amp, start, end: start + width },
                v1: ProfileSpec::Zero {},
            },
            toughness: vec![],
            front: FrontSpec::Linear { speed },
            numerics: Numerics { dt: 0.5f64.powi(dt_pow), ..Numerics::default() },
            outputs: Outputs::default(),
        };
        cfg.validate().unwrap();
        let dir = tempfile::tempdir().unwrap();
        let loaded = load_config(&write(dir.path(), &cfg.to_toml().unwrap())).unwrap();
        prop_assert_eq!(loaded, cfg);
    }
}
