//! The versioned fixture set shipped under `fixtures/v1`.

use moduli_core::aai::GateTable;
use moduli_core::gvu::{
    preset, CovarianceSpec, GvuConfig, LandscapeBinding, PresetKind, QuadraticLandscape,
    UpdaterKind,
};
use moduli_core::model::{Agent, Architecture};
use moduli_core::testbed::{
    make_bandit_battery, make_quadratic_battery, BanditBatterySpec, QuadraticFieldSpec,
};

use crate::formats::spec::{serialize_spec, GvuSetup, Spec};

pub const VERSION: &str = "v1";

/// (relative path, file contents) pairs in a fixed order.
pub fn fixture_set() -> Vec<(String, String)> {
    let mut out = Vec::new();
    let mut put = |path: &str, spec: Spec| out.push((path.to_string(), serialize_spec(&spec)));

    let quad = [
        ("reasoning", vec![0.5, -0.2], 2.0, 0.05, 4),
        ("planning", vec![0.3, 0.1], 1.0, 0.05, 3),
        ("tool-use", vec![0.6, -0.4], 3.0, 0.02, 3),
    ];
    for (family, center, a, sd, n) in quad {
        let spec = QuadraticFieldSpec::new(center, a, sd);
        let b = make_quadratic_battery(&spec, n, family, &format!("{family}-q"))
            .expect("fixture battery parameters are valid");
        put(&format!("aai/{family}-q.json"), Spec::Battery(b));
    }
    let bandit = BanditBatterySpec {
        task_means: vec![vec![0.2, 0.5, 0.8], vec![0.7, 0.1, 0.4]],
        delta: 0.05,
        rollout: true,
    };
    put(
        "bandit/control-b.json",
        Spec::Battery(make_bandit_battery(&bandit, "control", "control-b").expect("valid means")),
    );

    put(
        "agents/quadratic.json",
        Spec::Agent(Agent::new(
            "quadratic-a",
            Architecture::QuadraticField,
            vec![0.45, -0.15],
        )),
    );
    put(
        "agents/bandit.json",
        Spec::Agent(Agent::new(
            "bandit-a",
            Architecture::SoftmaxBandit,
            vec![0.0, 0.5, 1.0],
        )),
    );
    put(
        "gates/placeholder.json",
        Spec::Gates(GateTable::placeholder(&[
            "planning",
            "reasoning",
            "tool-use",
        ])),
    );

    for kind in PresetKind::ALL {
        put(
            &format!("gvu/{}.json", kind.id()),
            Spec::Gvu(GvuSetup::from(preset(kind, 0))),
        );
    }
    put(
        "gvu/quadratic.json",
        Spec::Gvu(GvuSetup {
            config: GvuConfig {
                eta: 0.05,
                generator_noise: CovarianceSpec::Isotropic(0.005),
                verifier_noise: CovarianceSpec::Diagonal(vec![0.005, 0.01]),
                updater: UpdaterKind::PlainGradient,
                n_candidates: 1,
                steps: 100,
                replicas: 4,
                seed_root: 0,
            },
            landscape: LandscapeBinding::Quadratic(QuadraticLandscape::new(vec![0.0, 0.0], 1.0)),
            theta0: vec![0.8, -0.6],
        }),
    );
    out
}
