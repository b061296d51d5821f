use thinpore::config::{ConfigError, ExperimentConfig, ExperimentKind, SurfaceSpec};
use thinpore_core::geometry::ObstacleShape;

#[test]
fn full_config_parses() {
    let c = ExperimentConfig::parse(
        "# scaling study
experiment.kind = scaling
experiment.seed = 9
geometry.shape = square
geometry.size = 1/2
physics.gamma = -2, 0, 2
physics.g = 1, 0
physics.f = 0.5, -1   # trailing comment
domain.epsilon = 1/4, 1/8, 1/16
numerics.layers = 6
",
    )
    .unwrap();
    assert_eq!(c.kind, ExperimentKind::Scaling);
    assert_eq!(c.seed, 9);
    assert_eq!(c.cases, vec![ObstacleShape::square(0.5)]);
    assert_eq!(c.gamma, vec![-2.0, 0.0, 2.0]);
    assert_eq!(c.epsilon, vec![0.25, 0.125, 0.0625]);
    assert_eq!(c.g, SurfaceSpec::Constant([1.0, 0.0]));
    assert_eq!(c.f_prime, [0.5, -1.0]);
    assert_eq!(c.layers, 6);
    assert_eq!(c.subdivisions, 4);
    assert!(c.scale_forcing);
}

#[test]
fn unknown_and_duplicate_keys_are_errors() {
    let e = ExperimentConfig::parse("experiment.kind = cell\nphysics.nu = 1").unwrap_err();
    assert_eq!(e, ConfigError::UnknownKey("physics.nu".into()));
    let e = ExperimentConfig::parse("experiment.kind = cell\nphysics.mu = 1\nphysics.mu = 2").unwrap_err();
    assert_eq!(e, ConfigError::DuplicateKey("physics.mu".into()));
    let e = ExperimentConfig::parse("experiment.kind = cell\njust text").unwrap_err();
    assert!(matches!(e, ConfigError::Syntax { line: 2, .. }));
    assert_eq!(
        ExperimentConfig::parse("physics.mu = 1").unwrap_err(),
        ConfigError::Missing("experiment.kind")
    );
}

#[test]
fn invalid_values_are_rejected() {
    for bad in [
        "domain.epsilon = 0.3",
        "physics.mu = 0",
        "physics.alpha = -1",
        "numerics.h = 0",
        "geometry.shape = square",
        "geometry.shape = disk\ngeometry.size = 0.6",
        "geometry.shape = hexagon\ngeometry.size = 0.2",
        "numerics.layers = 0",
        "output.vtk = maybe",
    ] {
        let text = format!("experiment.kind = cell\n{bad}");
        assert!(ExperimentConfig::parse(&text).is_err(), "{bad}");
    }
    let text = "experiment.kind = scaling\ndomain.epsilon = 1/4, 1/8";
    assert!(ExperimentConfig::parse(text).is_err());
    let text = "experiment.kind = fine\ngeometry.cases = none, square:0.5";
    assert!(ExperimentConfig::parse(text).is_err());
}

#[test]
fn face_table_surface_data() {
    let c = ExperimentConfig::parse(
        "experiment.kind = fine
geometry.shape = square
geometry.size = 0.5
physics.g.xlo = 1, 0
physics.g.yhi = 0, -2",
    )
    .unwrap();
    let SurfaceSpec::Table(t) = c.g else {
        panic!("expected a table")
    };
    assert_eq!(t.xlo, [1.0, 0.0]);
    assert_eq!(t.yhi, [0.0, -2.0]);
    assert_eq!(t.xhi, [0.0, 0.0]);
    let both = "experiment.kind = fine\nphysics.g = 1, 0\nphysics.g.xlo = 1, 0";
    assert!(ExperimentConfig::parse(both).is_err());
}

#[test]
fn cell_cases_and_layers() {
    let c = ExperimentConfig::parse(
        "experiment.kind = cell\ngeometry.cases = none, square:0.5, disk:1/4\nnumerics.h = 1/8, 1/16",
    )
    .unwrap();
    assert_eq!(
        c.cases,
        vec![ObstacleShape::None, ObstacleShape::square(0.5), ObstacleShape::disk(0.25)]
    );
    assert_eq!(c.cell_layers_for(0.0625), 16);
    let fixed = c.with_override("numerics.cell_layers", "8").unwrap();
    assert_eq!(fixed.cell_layers_for(0.0625), 8);
}

#[test]
fn hash_ignores_output_location_and_order() {
    let a = ExperimentConfig::parse("experiment.kind = cell\nphysics.mu = 2\noutput.dir = a").unwrap();
    let b = ExperimentConfig::parse("output.dir = b\nphysics.mu = 2\nexperiment.kind = cell\nexperiment.workers = 4")
        .unwrap();
    assert_eq!(a.hash(), b.hash());
    assert_eq!(a.hash().len(), 16);
    let c = a.with_override("physics.mu", "3").unwrap();
    assert_ne!(a.hash(), c.hash());
    let d = a.with_override("experiment.seed", "1").unwrap();
    assert_ne!(a.hash(), d.hash());
}

#[test]
fn kind_from_the_command_line() {
    let c = ExperimentConfig::parse_for("physics.gamma = 2", ExperimentKind::Darcy).unwrap();
    assert_eq!(c.kind, ExperimentKind::Darcy);
    assert!(ExperimentConfig::parse_for("experiment.kind = cell", ExperimentKind::Darcy).is_err());
}

#[test]
fn darcy_samples() {
    let c = ExperimentConfig::parse("experiment.kind = darcy\ndarcy.grad_p = 1, 0; 0, 2").unwrap();
    assert_eq!(c.grad_p, vec![[1.0, 0.0], [0.0, 2.0]]);
    let g = ExperimentConfig::parse("experiment.kind = darcy\ndarcy.grid = 3\ndarcy.range = 2").unwrap();
    assert_eq!(g.grad_p.len(), 9);
    let a = ExperimentConfig::parse("experiment.kind = darcy\ndarcy.permeability = 1/12, 0, 0, 1/12").unwrap();
    assert_eq!(a.permeability, Some([[1.0 / 12.0, 0.0], [0.0, 1.0 / 12.0]]));
}
