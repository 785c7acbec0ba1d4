//! Named wirings of the GVU operator onto the synthetic landscapes.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use super::landscape::{
    Adversarial, BanditFeedback, BanditLandscape, CandidateSampling, LandscapeBinding,
    SelfPlayLandscape,
};
use super::{CovarianceSpec, GvuConfig, GvuError, UpdaterKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetKind {
    /// Bandit rollouts scored by their returns.
    Rl,
    /// Win/loss against a frozen copy of the current policy.
    SelfPlay,
    /// Parameter candidates scored by a noisy scalar scorer.
    LmSelfImprove,
    /// Candidate sampling whose scorer is itself trained adversarially.
    GanStyle,
}

impl PresetKind {
    pub const ALL: [PresetKind; 4] = [
        PresetKind::Rl,
        PresetKind::SelfPlay,
        PresetKind::LmSelfImprove,
        PresetKind::GanStyle,
    ];

    pub fn id(self) -> &'static str {
        match self {
            PresetKind::Rl => "rl",
            PresetKind::SelfPlay => "self-play",
            PresetKind::LmSelfImprove => "lm-self-improve",
            PresetKind::GanStyle => "gan-style",
        }
    }

    pub fn from_id(s: &str) -> Result<Self, GvuError> {
        Self::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| GvuError::UnknownPreset(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub kind: PresetKind,
    pub config: GvuConfig,
    pub landscape: LandscapeBinding,
    pub theta0: Vec<f64>,
}

impl Preset {
    /// Sets the adversarial verifier's learning rate to zero. No-op for
    /// other kinds.
    pub fn freeze_verifier(mut self) -> Self {
        if let LandscapeBinding::Adversarial(a) = &mut self.landscape {
            a.verifier_eta = 0.0;
        }
        self
    }
}

/// Symmetric three-action game with win[a][b] + win[b][a] = 1.
pub fn cyclic_game() -> Vec<Vec<f64>> {
    vec![
        vec![0.5, 0.6, 0.3],
        vec![0.4, 0.5, 0.7],
        vec![0.7, 0.3, 0.5],
    ]
}

fn scorer() -> CandidateSampling {
    let center = vec![0.5, -0.3];
    CandidateSampling {
        scorer_center: center.clone(),
        center,
        sharpness: 1.0,
        probe_sd: 0.1,
        scorer_noise_sd: 0.05,
    }
}

pub fn preset(kind: PresetKind, seed_root: u64) -> Preset {
    let base = GvuConfig {
        seed_root,
        steps: 200,
        replicas: 1,
        updater: UpdaterKind::PlainGradient,
        generator_noise: CovarianceSpec::Zero,
        verifier_noise: CovarianceSpec::Zero,
        ..GvuConfig::default()
    };
    match kind {
        PresetKind::Rl => Preset {
            kind,
            config: GvuConfig {
                eta: 0.5,
                n_candidates: 16,
                ..base
            },
            landscape: LandscapeBinding::Bandit(BanditLandscape {
                means: vec![0.2, 0.5, 0.8],
                feedback: BanditFeedback::Bernoulli,
            }),
            theta0: vec![0.0; 3],
        },
        PresetKind::SelfPlay => {
            let theta0 = vec![0.0; 3];
            Preset {
                kind,
                config: GvuConfig {
                    eta: 0.5,
                    n_candidates: 16,
                    ..base
                },
                landscape: LandscapeBinding::SelfPlay(SelfPlayLandscape::new(
                    cyclic_game(),
                    theta0.clone(),
                )),
                theta0,
            }
        }
        PresetKind::LmSelfImprove => Preset {
            kind,
            config: GvuConfig {
                eta: 0.2,
                n_candidates: 8,
                verifier_noise: CovarianceSpec::Isotropic(1e-3),
                ..base
            },
            landscape: LandscapeBinding::CandidateSampling(scorer()),
            theta0: vec![-0.5, 0.5],
        },
        PresetKind::GanStyle => Preset {
            kind,
            config: GvuConfig {
                eta: 0.2,
                n_candidates: 8,
                verifier_noise: CovarianceSpec::Isotropic(1e-3),
                ..base
            },
            landscape: LandscapeBinding::Adversarial(Adversarial::new(scorer(), 0.1, seed_root)),
            theta0: vec![-0.5, 0.5],
        },
    }
}
