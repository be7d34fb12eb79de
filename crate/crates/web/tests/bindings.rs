use twofluid_web::{closure_values, pressure_law_values, Demo, FIELDS};

#[test]
fn closure_matches_reference_state() {
    // φ_g = 0.2 at the reference densities of the two-gas set
    let v = closure_values("two_gas", 0.2 * 2.0, 0.8 * 4.0).unwrap();
    assert_eq!(v.len(), 7);
    assert!((v[0] - 0.2).abs() < 1e-6, "{v:?}");
    assert!((v[3] / 1.01325e5 - 1.0).abs() < 1e-6, "{v:?}");
    assert!(v[5] < 1e-9 * v[3]);
    assert!(closure_values("water", 1.0, 1.0).is_err());
    assert!(closure_values("two_gas", f64::NAN, 1.0).is_err());
}

#[test]
fn pressure_law_is_increasing() {
    let v = pressure_law_values("liquid_gas", "l", 999.0, 1001.0, 11).unwrap();
    assert_eq!(v.len(), 22);
    assert_eq!((v[0], v[20]), (999.0, 1001.0));
    assert!(v.chunks(2).collect::<Vec<_>>().windows(2).all(|w| w[1][1] > w[0][1]));
    assert!(pressure_law_values("two_gas", "x", 1.0, 2.0, 5).is_err());
    assert!(pressure_law_values("two_gas", "g", 2.0, 1.0, 5).is_err());
}

#[test]
fn demo_steps_and_exposes_fields() {
    let mut d = Demo::create("two_gas", 4, 2e-3).unwrap();
    assert_eq!(d.n(), 4);
    let first = d.advance(0).unwrap();
    assert_eq!(first[0], 0.0);
    let info = d.advance(3).unwrap();
    assert_eq!(info[0], 3.0);
    assert!((info[1] - 6e-3).abs() < 1e-15);
    assert!(info[4] < 1e-12 && info[5] >= 0.0);
    for name in FIELDS {
        let f = d.nodal(name).unwrap();
        assert_eq!(f.len(), 25, "{name}");
        assert!(f.iter().all(|x| x.is_finite()), "{name}");
    }
    assert!(d.nodal("vorticity").is_err());
    assert!(Demo::create("dam_break", 4, 1e-3).is_err());
}
