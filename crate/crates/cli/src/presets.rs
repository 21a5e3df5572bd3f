//! Bundled configs for the figures.

use std::path::PathBuf;

use crate::config::{
    ChannelKind, ExperimentConfig, ExperimentKind, Fit, GeometrySpec, QuadratureSpec, SnrGrid,
};

pub const NAMES: [&str; 5] = ["fig2", "fig3", "fig5", "fig6", "fig6-desk"];

pub fn describe(name: &str) -> Option<&'static str> {
    Some(match name {
        "fig2" => "sorted correlation eigenvalues, 20λ UPA at λ/2, isotropic, uncoupled: exact vs Fourier",
        "fig3" => "sorted coupled eigenvalues, 20λ UPA at λ/2, omni antennas, rho = 0.01: whitened exact vs Fourier",
        "fig5" => "DOF augmentation, 10λ UPA at λ/4, omni antennas, rho in {1e-1, 1e-2, 1e-3}",
        "fig6" => "ergodic capacity of the exact channel, 15λ UPAs at 0.4λ, IID receive, rho in {0.3, 0.1, 0.03}",
        "fig6-desk" => "fig6 shrunk to 6λ UPAs (256 antennas per side) and 100 realizations",
        _ => return None,
    })
}

fn base(kind: ExperimentKind, tx: GeometrySpec, name: &str) -> ExperimentConfig {
    ExperimentConfig {
        kind,
        tx,
        rx: None,
        spectrum: "isotropic".into(),
        rx_spectrum: "isotropic".into(),
        pattern: None,
        rho: Vec::new(),
        snr_db: SnrGrid::default(),
        mc: 200,
        seed: 1,
        out_dir: PathBuf::from("out").join(name),
        channel: ChannelKind::Exact,
        threshold_db: -40.0,
        slope_window_db: [30.0, 45.0],
        quadrature: QuadratureSpec::default(),
        unit_audit_wavelength: None,
    }
}

pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let c = match name {
        "fig2" => base(ExperimentKind::Eigenvalues, GeometrySpec::square(20.0, 0.5, Fit::Floor), name),
        "fig3" => ExperimentConfig {
            pattern: Some("omni".into()),
            rho: vec![0.01],
            ..base(ExperimentKind::Eigenvalues, GeometrySpec::square(20.0, 0.5, Fit::Floor), name)
        },
        "fig5" => ExperimentConfig {
            pattern: Some("omni".into()),
            rho: vec![1e-1, 1e-2, 1e-3],
            ..base(ExperimentKind::DofSweep, GeometrySpec::square(10.0, 0.25, Fit::Floor), name)
        },
        "fig6" => ExperimentConfig {
            pattern: Some("omni".into()),
            rho: vec![0.3, 0.1, 0.03],
            ..base(ExperimentKind::Capacity, GeometrySpec::square(15.0, 0.4, Fit::Floor), name)
        },
        "fig6-desk" => ExperimentConfig {
            pattern: Some("omni".into()),
            rho: vec![0.3, 0.1, 0.03],
            mc: 100,
            ..base(ExperimentKind::Capacity, GeometrySpec::square(6.0, 0.4, Fit::Floor), name)
        },
        _ => return None,
    };
    Some(c)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for n in NAMES {
            let c = preset(n).unwrap();
            c.validate().unwrap();
            assert!(describe(n).is_some());
            let back = ExperimentConfig::from_str(&c.to_toml(), false).unwrap();
            assert_eq!(back, c);
        }
        assert_eq!(preset("fig6-desk").unwrap().validate().unwrap().tx.count(), 256);
        assert_eq!(preset("fig2").unwrap().validate().unwrap().tx.count(), 1681);
        assert!(preset("fig4").is_none());
    }
}
