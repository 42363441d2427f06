//! Property checks shared by the property suite and the acceptance run.
#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestError, TestRunner};

use piezo_smc::controllers::{smcpmc_control, LowPassFilter, PiController, PiGains, SlidingSurface, SmcpmcGains};
use piezo_smc::friction::{coulomb_friction, drag_friction, static_friction, viscous_friction, FrictionParams};
use piezo_smc::sysid::{identify, PulseDataset, PulseRow};

pub const CASES: u32 = 1000;

pub type Outcome = Result<(), TestError<String>>;

fn runner() -> TestRunner {
    TestRunner::new(Config {
        cases: CASES,
        failure_persistence: None,
        ..Config::default()
    })
}

fn run<S: Strategy>(strategy: S, test: impl Fn(S::Value) -> Result<(), TestCaseError>) -> Outcome
where
    S::Value: std::fmt::Debug,
{
    runner().run(&strategy, test).map_err(|e| match e {
        TestError::Abort(r) => TestError::Abort(r),
        TestError::Fail(r, v) => TestError::Fail(r, format!("{v:?}")),
    })
}

fn coefficient() -> impl Strategy<Value = f64> {
    prop_oneof![Just(0.0), 0.0..10.0, 0.0..1e3]
}

fn velocity() -> impl Strategy<Value = f64> {
    prop_oneof![-1.0..1.0, -1e-6..1e-6, -1e3..1e3]
}

fn friction_params() -> impl Strategy<Value = FrictionParams> {
    (coefficient(), coefficient(), coefficient(), coefficient())
        .prop_map(|(f_s, f_c, f_v, f_d)| FrictionParams::new(f_s, f_c, f_v, f_d).unwrap())
}

/// Every law is odd in its driving quantity.
pub fn friction_symmetry() -> Outcome {
    run((friction_params(), velocity(), velocity()), |(p, v, f_a)| {
        prop_assert_eq!(
            coulomb_friction(-v, p.f_c).unwrap(),
            -coulomb_friction(v, p.f_c).unwrap()
        );
        prop_assert_eq!(
            viscous_friction(-v, p.f_v).unwrap(),
            -viscous_friction(v, p.f_v).unwrap()
        );
        prop_assert_eq!(drag_friction(-v, p.f_d).unwrap(), -drag_friction(v, p.f_d).unwrap());
        prop_assert_eq!(p.kinetic(-v), -p.kinetic(v));
        prop_assert_eq!(
            static_friction(-f_a, -v, p.f_s).unwrap(),
            -static_friction(f_a, v, p.f_s).unwrap()
        );
        Ok(())
    })
}

/// Friction never feeds energy into a moving body.
pub fn friction_dissipativity() -> Outcome {
    run((friction_params(), velocity()), |(p, v)| {
        prop_assert!(v * coulomb_friction(v, p.f_c).unwrap() >= 0.0);
        prop_assert!(v * viscous_friction(v, p.f_v).unwrap() >= 0.0);
        prop_assert!(v * drag_friction(v, p.f_d).unwrap() >= 0.0);
        prop_assert!(v * p.kinetic(v) >= 0.0);
        Ok(())
    })
}

/// Plateau data generated from random coefficients with a few percent of
/// multiplicative noise; both directions always have four rows.
fn pulse_dataset() -> impl Strategy<Value = PulseDataset> {
    let coeffs = (50.0..200.0f64, 50.0..200.0f64, 0.5..5.0f64, 0.5..8.0f64);
    let pos = proptest::collection::vec((0.0..1.0f64, -0.03..0.03f64), 4);
    let neg = proptest::collection::vec((0.0..1.0f64, -0.03..0.03f64), 4);
    (coeffs, pos, neg).prop_map(|((a1p, a1n, a2p, a2n), pos, neg)| {
        let alpha3 = 6.0;
        let mut rows = Vec::new();
        for (i, (x, noise)) in pos.into_iter().enumerate() {
            let u = (a2p + 0.5) / alpha3 + 0.4 * i as f64 + 0.3 * x;
            rows.push(PulseRow {
                u_volts: u,
                v_steady: (alpha3 * u - a2p) / a1p * (1.0 + noise),
            });
        }
        for (i, (x, noise)) in neg.into_iter().enumerate() {
            let u = -(a2n + 0.5) / alpha3 - 0.4 * i as f64 - 0.3 * x;
            rows.push(PulseRow {
                u_volts: u,
                v_steady: (alpha3 * u + a2n) / a1n * (1.0 + noise),
            });
        }
        PulseDataset::new(rows).unwrap()
    })
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-12)
}

/// Scaling the input gain scales every coefficient by the same factor;
/// scaling the velocities divides the viscous terms and leaves the Coulomb
/// terms alone.
pub fn ls_scale_equivariance() -> Outcome {
    run((pulse_dataset(), 0.1..10.0f64, 0.1..10.0f64), |(data, c, k)| {
        let base = identify(&data, 6.0).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let scaled_gain = identify(&data, 6.0 * c).map_err(|e| TestCaseError::fail(e.to_string()))?;
        for (a, b) in base.coefficients().iter().zip(scaled_gain.coefficients()) {
            let (a, b) = (a.unwrap(), b.unwrap());
            prop_assert!(close(b, c * a, 1e-9), "gain scale {c}: {a} -> {b}");
        }
        let stretched = PulseDataset::new(
            data.rows()
                .iter()
                .map(|r| PulseRow {
                    u_volts: r.u_volts,
                    v_steady: k * r.v_steady,
                })
                .collect(),
        )
        .unwrap();
        let s = identify(&stretched, 6.0).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let [a1p, a1n, a2p, a2n] = base.coefficients().map(Option::unwrap);
        let [b1p, b1n, b2p, b2n] = s.coefficients().map(Option::unwrap);
        prop_assert!(close(b1p, a1p / k, 1e-9));
        prop_assert!(close(b1n, a1n / k, 1e-9));
        prop_assert!(close(b2p, a2p, 1e-8) || (b2p - a2p).abs() < 1e-9);
        prop_assert!(close(b2n, a2n, 1e-8) || (b2n - a2n).abs() < 1e-9);
        Ok(())
    })
}

/// A constant input is passed with unit gain: an output already at the
/// input stays there, and from rest the gap shrinks geometrically.
pub fn filter_dc_gain() -> Outcome {
    run(
        (-1e3..1e3f64, 1e-3..1.0f64, 0.001..1.0f64, 1usize..5000),
        |(x, tau, ratio, n)| {
            let dt = ratio * tau;
            let mut held = LowPassFilter::new(tau).unwrap().with_state(x);
            let mut rest = LowPassFilter::new(tau).unwrap();
            for _ in 0..n {
                held.step(x, dt);
                rest.step(x, dt);
            }
            prop_assert!((held.value() - x).abs() <= 1e-12 * x.abs());
            let expected_gap = x.abs() * (1.0 - ratio).powi(n as i32);
            prop_assert!((rest.value() - x).abs() <= expected_gap * (1.0 + 1e-9) + 1e-12 * x.abs());
            prop_assert!(rest.value().abs() <= x.abs() * (1.0 + 1e-12));
            Ok(())
        },
    )
}

/// The PI output never leaves the limit and the integral cannot wind up
/// past what one step of error can add beyond the limit.
pub fn pi_anti_windup_clamp() -> Outcome {
    let errors = proptest::collection::vec(
        prop_oneof![-1.0..1.0f64, -1e-4..1e-4f64, Just(1.0f64), Just(-1.0f64)],
        1..400,
    );
    run(
        (1.0..1e5f64, 1.0..1e7f64, 0.1..20.0f64, 1e-5..1e-2f64, errors),
        |(kp, ki, u_limit, dt, errors): (f64, f64, f64, f64, Vec<f64>)| {
            let mut pi = PiController::new(PiGains { kp, ki, u_limit }).unwrap();
            let e_max = errors.iter().fold(0.0f64, |m, e| m.max(e.abs()));
            let bound = u_limit + kp * e_max + ki * e_max * dt;
            for &e in &errors {
                let u = pi.step(e, dt);
                prop_assert!(u.abs() <= u_limit, "u = {u}");
                prop_assert!(
                    (ki * pi.integral()).abs() <= bound * (1.0 + 1e-12),
                    "ki·I = {} > {bound}",
                    ki * pi.integral()
                );
            }
            Ok(())
        },
    )
}

/// The switching law without feedforward is odd in the error state.
pub fn smc_odd_symmetry() -> Outcome {
    run(
        (-1e-2..1e-2f64, -1.0..1.0f64, 0.1..1e3f64, 0.0..5.0f64),
        |(e, e_dot, eta, beta)| {
            let gains = SmcpmcGains {
                eta,
                beta,
                ..SmcpmcGains::default()
            };
            let surface = SlidingSurface::default();
            let a = smcpmc_control(e, e_dot, 0.0, &gains, &surface).unwrap();
            let b = smcpmc_control(-e, -e_dot, 0.0, &gains, &surface).unwrap();
            prop_assert_eq!(a, -b);
            Ok(())
        },
    )
}
