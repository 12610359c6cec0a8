use num_complex::Complex;
use proptest::prelude::*;
use vpfp::experiments::{Cell, ExperimentKind, Table};
use vpfp::io::checkpoint::{decode, encode};
use vpfp::io::csv::{parse_csv, render_csv};
use vpfp::io::parse_config;
use vpfp::solver::{PhaseGrid, SpectralField};

fn config_text() -> impl Strategy<Value = String> {
    (
        prop::collection::vec(1e-9f64..1.0, 1..4),
        prop::option::of(1usize..9),
        prop::option::of(0.01f64..500.0),
        prop::option::of(prop::sample::select(vec!["coulomb", "screened"])),
        prop::option::of(1usize..50),
    )
        .prop_map(|(nu, k_max, t, kernel, stride)| {
            let mut s = format!(
                "nu = {}\n",
                nu.iter().map(|x| format!("{x:e}")).collect::<Vec<_>>().join(" ,")
            );
            if let Some(k) = k_max {
                s += &format!("  k_max= {k}   # modes\n");
            }
            if let Some(t) = t {
                s += &format!("t_final = {t}\n");
            }
            if let Some(w) = kernel {
                s += &format!("kernel = {w}\n\n");
            }
            if let Some(n) = stride {
                s += &format!("stride = {n}\n");
            }
            s
        })
}

proptest! {
    #[test]
    fn canonical_text_is_a_fixed_point(text in config_text()) {
        let c = parse_config(&text).unwrap();
        let canon = c.canonical();
        let again = parse_config(&canon).unwrap();
        prop_assert_eq!(again.canonical(), canon);
        prop_assert_eq!(again.hash(), c.hash());
        prop_assert_eq!(
            again.to_spec(ExperimentKind::Echo).unwrap(),
            c.to_spec(ExperimentKind::Echo).unwrap()
        );
    }

    #[test]
    fn hash_tracks_canonical_text(a in config_text(), b in config_text()) {
        let (ca, cb) = (parse_config(&a).unwrap(), parse_config(&b).unwrap());
        prop_assert_eq!(ca.canonical() == cb.canonical(), ca.hash() == cb.hash());
    }

    #[test]
    fn csv_floats_round_trip(xs in prop::collection::vec(any::<f64>(), 1..50)) {
        let mut t = Table::new("t", &["i", "x"]);
        for (i, &x) in xs.iter().enumerate() {
            t.push(vec![Cell::I(i as i64), Cell::F(x)]);
        }
        let (_, rows) = parse_csv(&render_csv(&t).unwrap()).unwrap();
        for (r, x) in rows.iter().zip(&xs) {
            let y: f64 = r[1].parse().unwrap();
            if x.is_nan() {
                prop_assert!(y.is_nan());
            } else {
                prop_assert_eq!(y.to_bits(), x.to_bits());
            }
        }
    }

    #[test]
    fn checkpoint_round_trips(seed in any::<u64>(), time in any::<f64>()) {
        let g = PhaseGrid::aligned(2, 4.0f64, 16).unwrap();
        let mut f = SpectralField::from_fn(g, |k, e| {
            let s = (seed as f64) * 1e-19;
            Complex::new(s * k as f64 + e.sin(), (s + e).cos() * 1e-200)
        });
        f.time = time;
        let (back, m) = decode(&encode(&f, "h", seed).unwrap()).unwrap();
        prop_assert_eq!(m.step, seed);
        prop_assert_eq!(back.time.to_bits(), f.time.to_bits());
        for (a, b) in f.data.iter().zip(&back.data) {
            prop_assert_eq!(a.re.to_bits(), b.re.to_bits());
            prop_assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }
}

#[test]
fn cli_config_errors_name_the_line() {
    let e = parse_config("k_max = 2\n\nnu = -1\n").unwrap_err().to_string();
    assert!(e.contains("line 3") && e.contains("nu"), "{e}");
    let e = parse_config("eta_max = 5\nn_eta = 1000\ndt = 0.02\n").unwrap_err().to_string();
    assert!(e.contains("line 3") && e.contains("dt"), "{e}");
    let e = parse_config("nu = 1e-3\nbogus = 1\n").unwrap_err().to_string();
    assert!(e.contains("line 2") && e.contains("bogus"), "{e}");
}
