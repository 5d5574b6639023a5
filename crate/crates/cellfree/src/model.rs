//! Shared domain types and unit conversions.
//!
//! Every power quantity is stored internally in linear milliwatt; decibel
//! values only exist at the configuration boundary. Channel gains are
//! dimensionless linear power ratios.

use crate::{Error, Result};

/// A value in decibels (dB or dBm depending on context).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decibel(pub f64);

/// A non-negative power in linear milliwatt.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearPower(pub f64);

impl LinearPower {
    pub fn mw(self) -> f64 {
        self.0
    }
}

/// 10^(x/10), dBm to milliwatt.
pub fn dbm_to_mw(x: Decibel) -> LinearPower {
    LinearPower(10f64.powf(x.0 / 10.0))
}

/// 10*log10(p), milliwatt to dBm.
pub fn mw_to_dbm(p: LinearPower) -> Decibel {
    Decibel(10.0 * p.0.log10())
}

/// Dimensionless dB ratio to a linear ratio.
pub fn db_to_lin(x: Decibel) -> f64 {
    10f64.powf(x.0 / 10.0)
}

/// Simulation parameters shared by every module.
///
/// Defaults reproduce the reference configuration: 8 antennas per AP,
/// single-antenna users, 23 dBm transmit power, -174 dBm/Hz noise density
/// with an 8 dB noise figure over 20 MHz, forgetting factor 0.2, 0.4 km
/// cluster boundary and sparsity parameter M/(0.9 P_T).
#[derive(Debug, Clone)]
pub struct SimConfig {
    /// Antennas per AP (M).
    pub m: usize,
    /// Antennas per user (N).
    pub n: usize,
    /// Maximum transmit power per user, mW.
    pub p_t: LinearPower,
    pub noise_psd_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub bandwidth_hz: f64,
    /// Proportional-fair forgetting factor, in (0, 1).
    pub eta: f64,
    /// User-centric cluster boundary distance, km.
    pub rho_km: f64,
    /// Sparsity parameter of the reweighted l1 relaxation.
    pub epsilon_cs: f64,
    /// Scale of the non-local interference approximation.
    pub kappa: f64,
    pub fp_max_iters: usize,
    pub fp_rel_tol: f64,
    /// Relative tolerance of the per-user power bisection.
    pub bisect_tol: f64,
    /// A user is scheduled when its power exceeds this fraction of P_T.
    pub power_threshold_frac: f64,
    /// Value assigned to lambda when the capacity constraint is violated.
    pub lambda_init: f64,
    pub seed: u64,
}

/// Default epsilon from the table formula: M / (0.9 P_T), with P_T in mW.
pub fn default_epsilon(m: usize, p_t: LinearPower) -> f64 {
    m as f64 / (0.9 * p_t.mw())
}

impl Default for SimConfig {
    fn default() -> Self {
        let m = 8;
        let p_t = dbm_to_mw(Decibel(23.0));
        SimConfig {
            m,
            n: 1,
            p_t,
            noise_psd_dbm_hz: -174.0,
            noise_figure_db: 8.0,
            bandwidth_hz: 20e6,
            eta: 0.2,
            rho_km: 0.4,
            epsilon_cs: default_epsilon(m, p_t),
            kappa: 1.0,
            fp_max_iters: 100,
            fp_rel_tol: 1e-4,
            bisect_tol: 1e-10,
            power_threshold_frac: 0.01,
            lambda_init: 0.1,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::Config("m must be >= 1".into()));
        }
        if self.n < 1 {
            return Err(Error::Config("n must be >= 1".into()));
        }
        if !(self.p_t.mw() > 0.0) {
            return Err(Error::Config("p_t must be positive".into()));
        }
        if !(self.bandwidth_hz > 0.0) {
            return Err(Error::Config("bandwidth_hz must be positive".into()));
        }
        if !(self.eta > 0.0 && self.eta < 1.0) {
            return Err(Error::Config("eta must lie in (0, 1)".into()));
        }
        if !(self.rho_km > 0.0) {
            return Err(Error::Config("rho_km must be positive".into()));
        }
        if !(self.epsilon_cs > 0.0) {
            return Err(Error::Config("epsilon_cs must be positive".into()));
        }
        if !(self.kappa >= 0.0) {
            return Err(Error::Config("kappa must be non-negative".into()));
        }
        if self.fp_max_iters == 0 {
            return Err(Error::Config("fp_max_iters must be >= 1".into()));
        }
        if !(self.fp_rel_tol > 0.0) {
            return Err(Error::Config("fp_rel_tol must be positive".into()));
        }
        if !(self.bisect_tol > 0.0) {
            return Err(Error::Config("bisect_tol must be positive".into()));
        }
        if !(self.power_threshold_frac > 0.0 && self.power_threshold_frac < 1.0) {
            return Err(Error::Config(
                "power_threshold_frac must lie in (0, 1)".into(),
            ));
        }
        if !(self.lambda_init >= 0.0) {
            return Err(Error::Config("lambda_init must be non-negative".into()));
        }
        Ok(())
    }

    /// Noise power per receive antenna over the full bandwidth, mW.
    pub fn noise_power(&self) -> LinearPower {
        noise_power(
            self.noise_psd_dbm_hz,
            self.noise_figure_db,
            self.bandwidth_hz,
        )
    }
}

/// sigma^2 in mW: psd + 10 log10(bandwidth) + noise figure, converted to linear.
pub fn noise_power(noise_psd_dbm_hz: f64, noise_figure_db: f64, bandwidth_hz: f64) -> LinearPower {
    let dbm = noise_psd_dbm_hz + 10.0 * bandwidth_hz.log10() + noise_figure_db;
    dbm_to_mw(Decibel(dbm))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_to_mw_reference_points() {
        assert_eq!(dbm_to_mw(Decibel(0.0)).mw(), 1.0);
        assert!((dbm_to_mw(Decibel(23.0)).mw() - 199.526).abs() < 1e-3);
        let expect = 10f64.powf(-9.3);
        assert!((dbm_to_mw(Decibel(-93.0)).mw() - expect).abs() / expect < 1e-12);
    }

    #[test]
    fn dbm_round_trip() {
        for x in [-174.0, -93.0, -20.0, 0.0, 23.0, 46.0] {
            let back = mw_to_dbm(dbm_to_mw(Decibel(x))).0;
            assert!((back - x).abs() <= 1e-12 * x.abs().max(1.0));
        }
    }

    #[test]
    fn noise_power_reference_points() {
        let n = noise_power(-174.0, 8.0, 20e6);
        let expect_dbm = -174.0 + 10.0 * 20e6f64.log10() + 8.0;
        assert!((expect_dbm - -92.9897).abs() < 1e-4);
        assert!((mw_to_dbm(n).0 - expect_dbm).abs() < 1e-9);

        let identity = noise_power(-174.0, 0.0, 1.0);
        assert!((mw_to_dbm(identity).0 - -174.0).abs() < 1e-9);

        let half = noise_power(-174.0, 8.0, 10e6);
        assert!((mw_to_dbm(half).0 - -96.0).abs() < 1e-9);
    }

    #[test]
    fn default_config_matches_table() {
        let cfg = SimConfig::default();
        assert_eq!(cfg.m, 8);
        assert_eq!(cfg.n, 1);
        assert!((cfg.p_t.mw() - 199.5262315).abs() < 1e-6);
        assert_eq!(cfg.eta, 0.2);
        assert_eq!(cfg.rho_km, 0.4);
        let eps = 8.0 / (0.9 * cfg.p_t.mw());
        assert!((cfg.epsilon_cs - eps).abs() < 1e-15);
        assert_eq!(cfg.kappa, 1.0);
        cfg.validate().unwrap();
    }

    #[test]
    fn validation_rejects_bad_values() {
        let mut cfg = SimConfig::default();
        cfg.m = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = SimConfig::default();
        cfg.n = 0;
        assert!(cfg.validate().is_err());

        let mut cfg = SimConfig::default();
        cfg.p_t = LinearPower(0.0);
        assert!(cfg.validate().is_err());

        let mut cfg = SimConfig::default();
        cfg.bandwidth_hz = -1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = SimConfig::default();
        cfg.eta = 1.5;
        assert!(cfg.validate().is_err());

        let mut cfg = SimConfig::default();
        cfg.epsilon_cs = 0.0;
        assert!(cfg.validate().is_err());
    }
}
