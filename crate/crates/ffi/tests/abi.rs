use std::f64::consts::{PI, TAU};
use std::ffi::CStr;
use std::process::Command;
use std::ptr;

use mwqubit_ffi::*;

const CHI0: f64 = TAU * 27.78e3;

fn last_error() -> String {
    let p = mwq_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

struct Seq(*mut MwqSequence);

impl Seq {
    fn new(family: MwqFamily, theta: f64) -> Seq {
        let mut p = ptr::null_mut();
        let st = unsafe { mwq_sequence_new(family, theta, CHI0, 1, &mut p) };
        assert_eq!(st, MwqStatus::Ok);
        assert!(!p.is_null());
        Seq(p)
    }
}

impl Drop for Seq {
    fn drop(&mut self) {
        unsafe { mwq_sequence_free(self.0) };
    }
}

#[test]
fn plain_pi_pulse_is_perfect_without_errors() {
    let s = Seq::new(MwqFamily::Rabi, PI);
    let mut dur = 0.0;
    assert_eq!(
        unsafe { mwq_sequence_duration(s.0, &mut dur) },
        MwqStatus::Ok
    );
    assert!((dur - PI / CHI0).abs() < 1e-15);
    let mut fid = 0.0;
    let st = unsafe {
        mwq_sequence_fidelity(s.0, 0.0, 0.0, MwqMeasure::Propagator, ptr::null(), &mut fid)
    };
    assert_eq!(st, MwqStatus::Ok);
    assert!((fid - 1.0).abs() < 1e-12);
    assert!(mwq_last_error_message().is_null());
}

#[test]
fn composite_pulses_beat_plain_under_angle_error() {
    let eps = 0.05;
    let fid = |family| {
        let s = Seq::new(family, PI);
        let mut f = 0.0;
        let st = unsafe {
            mwq_sequence_fidelity(
                s.0,
                0.0,
                eps,
                MwqMeasure::StateFromZero,
                ptr::null(),
                &mut f,
            )
        };
        assert_eq!(st, MwqStatus::Ok);
        f
    };
    let plain = fid(MwqFamily::Rabi);
    assert!(fid(MwqFamily::Bb1) > plain);
    assert!(fid(MwqFamily::Scrofulous) > plain);
    let mut n = 0usize;
    let s = Seq::new(MwqFamily::Bb1, PI);
    assert_eq!(
        unsafe { mwq_sequence_segment_count(s.0, &mut n) },
        MwqStatus::Ok
    );
    assert_eq!(n, 4);
}

#[test]
fn ensemble_fidelity_matches_lattice_value() {
    let s = Seq::new(MwqFamily::Rabi, PI);
    let ens = MwqEnsemble {
        chi0: CHI0,
        delta0: 0.0,
        dchi: 0.003 * CHI0,
        ddelta: 0.073 * CHI0,
        correlation: 0.0,
    };
    let g = 1.0 / (2.0 * 5.5e-3);
    let decay = MwqDecay {
        gamma1: g,
        gamma2: g,
    };
    let mut f = 0.0;
    let st = unsafe {
        mwq_ensemble_gate_fidelity(s.0, &ens, &decay, MwqMeasure::StateFromZero, 0, &mut f)
    };
    assert_eq!(st, MwqStatus::Ok);
    assert!((f - 0.99225).abs() < 1e-3, "{f}");
}

#[test]
fn propagator_with_decay_is_reported() {
    let s = Seq::new(MwqFamily::Rabi, PI);
    let decay = MwqDecay {
        gamma1: 10.0,
        gamma2: 10.0,
    };
    let mut f = -1.0;
    let st =
        unsafe { mwq_sequence_fidelity(s.0, 0.0, 0.0, MwqMeasure::Propagator, &decay, &mut f) };
    assert_eq!(st, MwqStatus::PropagatorWithDecay);
    assert_eq!(f, -1.0);
    assert!(last_error().contains("dissipation"));
}

#[test]
fn invalid_arguments_map_to_codes() {
    let mut p = ptr::null_mut();
    let st = unsafe { mwq_sequence_new(MwqFamily::Scrofulous, PI / 2.0, CHI0, 1, &mut p) };
    assert_eq!(st, MwqStatus::InvalidInput);
    assert!(p.is_null());
    assert!(last_error().contains("SCROFULOUS"));

    let st = unsafe { mwq_sequence_new(MwqFamily::Rabi, PI, CHI0, 1, ptr::null_mut()) };
    assert_eq!(st, MwqStatus::NullPointer);

    let mut f = 0.0;
    let st = unsafe {
        mwq_sequence_fidelity(
            ptr::null(),
            0.0,
            0.0,
            MwqMeasure::StateFromZero,
            ptr::null(),
            &mut f,
        )
    };
    assert_eq!(st, MwqStatus::NullPointer);

    let bad = MwqDecay {
        gamma1: -1.0,
        gamma2: 0.0,
    };
    let st = unsafe { mwq_torrey_population(1e-6, CHI0, 0.0, &bad, true, &mut f) };
    assert_eq!(st, MwqStatus::InvalidInput);

    let st = unsafe { mwq_torrey_population(f64::NAN, CHI0, 0.0, ptr::null(), true, &mut f) };
    assert_eq!(st, MwqStatus::NonFinite);

    unsafe { mwq_sequence_free(ptr::null_mut()) };
}

#[test]
fn torrey_and_ensemble_population_agree_for_sharp_ensemble() {
    let times: Vec<f64> = (0..50).map(|i| i as f64 * 2e-6).collect();
    let ens = MwqEnsemble {
        chi0: CHI0,
        delta0: 0.1 * CHI0,
        dchi: 0.0,
        ddelta: 0.0,
        correlation: 0.0,
    };
    let decay = MwqDecay {
        gamma1: 50.0,
        gamma2: 50.0,
    };
    let mut avg = vec![0.0; times.len()];
    let st = unsafe {
        mwq_ensemble_population(
            times.as_ptr(),
            times.len(),
            &ens,
            &decay,
            0,
            avg.as_mut_ptr(),
        )
    };
    assert_eq!(st, MwqStatus::Ok);
    for (t, a) in times.iter().zip(&avg) {
        let mut p = 0.0;
        let st = unsafe { mwq_torrey_population(*t, CHI0, 0.1 * CHI0, &decay, true, &mut p) };
        assert_eq!(st, MwqStatus::Ok);
        assert!((p - a).abs() < 1e-12, "t={t}: {p} vs {a}");
    }
}

#[test]
fn leakage_grows_with_channel_strength() {
    let gate = PI / CHI0;
    let run = |rabi: f64| {
        let ch = [
            MwqLeakageChannel {
                rabi,
                detuning: TAU * 130e3,
            },
            MwqLeakageChannel {
                rabi,
                detuning: TAU * 260e3,
            },
        ];
        let mut out = MwqLeakageSummary::default();
        let st = unsafe { mwq_leakage(CHI0, gate, ch.as_ptr(), ch.len(), &mut out) };
        assert_eq!(st, MwqStatus::Ok);
        out
    };
    let weak = run(TAU * 3e3);
    let strong = run(TAU * 6e3);
    assert!(weak.max_combined > 0.0 && weak.max_combined < 1e-3);
    assert!(strong.max_combined > 3.0 * weak.max_combined);
    assert!(weak.final_pop1 > 0.99);

    let mut out = MwqLeakageSummary::default();
    let st = unsafe { mwq_leakage(CHI0, gate, ptr::null(), 0, &mut out) };
    assert_eq!(st, MwqStatus::Ok);
    assert_eq!(out.max_combined, 0.0);
}

#[test]
fn fit_recovers_noiseless_trace() {
    let times: Vec<f64> = (0..600).map(|i| i as f64 * 1e-6 / 0.55).collect();
    let ens = MwqEnsemble {
        chi0: CHI0,
        delta0: 0.0,
        dchi: 0.003 * CHI0,
        ddelta: 0.073 * CHI0,
        correlation: 0.0,
    };
    let g = 1.0 / (2.0 * 10.6e-3);
    let decay = MwqDecay {
        gamma1: g,
        gamma2: g,
    };
    let mut pop = vec![0.0; times.len()];
    let st = unsafe {
        mwq_ensemble_population(
            times.as_ptr(),
            times.len(),
            &ens,
            &decay,
            0,
            pop.as_mut_ptr(),
        )
    };
    assert_eq!(st, MwqStatus::Ok);
    let signal: Vec<f64> = pop.iter().map(|p| 0.8 * p + 0.1).collect();

    let mut fit = MwqRabiFit::default();
    let st = unsafe {
        mwq_fit_rabi(
            times.as_ptr(),
            signal.as_ptr(),
            times.len(),
            &decay,
            &mut fit,
        )
    };
    assert_eq!(st, MwqStatus::Ok, "{}", last_error());
    assert!(fit.converged);
    assert!((fit.values[0] / CHI0 - 1.0).abs() < 1e-4);
    assert!((fit.values[3] / ens.ddelta - 1.0).abs() < 0.02);
    assert!((fit.values[4] - 0.8).abs() < 1e-3);
    assert!((fit.values[5] - 0.1).abs() < 1e-3);
}

#[test]
fn fit_rejects_mismatched_input() {
    let mut fit = MwqRabiFit::default();
    let st = unsafe { mwq_fit_rabi(ptr::null(), ptr::null(), 5, ptr::null(), &mut fit) };
    assert_eq!(st, MwqStatus::NullPointer);
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(mwq_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c_and_cpp() {
    let include = concat!(env!("CARGO_MANIFEST_DIR"), "/include");
    for (compiler, lang) in [("cc", "c"), ("c++", "c++")] {
        if Command::new(compiler).arg("--version").output().is_err() {
            eprintln!("{compiler} unavailable; skipping");
            continue;
        }
        let out = Command::new(compiler)
            .args(["-fsyntax-only", "-Wall", "-Werror", "-x", lang, "-I", include, "-"])
            .stdin(std::process::Stdio::piped())
            .stdout(std::process::Stdio::piped())
            .stderr(std::process::Stdio::piped())
            .spawn()
            .and_then(|mut child| {
                use std::io::Write;
                child
                    .stdin
                    .take()
                    .unwrap()
                    .write_all(b"#include \"mwqubit.h\"\nint main(void) { MwqSequence *s = 0; (void)s; return MWQ_STATUS_OK; }\n")?;
                child.wait_with_output()
            })
            .unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}
