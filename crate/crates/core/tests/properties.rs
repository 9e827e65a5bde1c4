use num_complex::Complex;
use proptest::prelude::*;
use rand::RngCore;

use ue_antenna::blockage::{AttenuationTable, BlockageScenario};
use ue_antenna::device_layout::{reference_handset, validate};
use ue_antenna::element_pattern::{FieldPair, PatternParams};
use ue_antenna::field_synthesis::{combine_coherent, equal_weights, imbalance_stats, sphere_sweep, PreparedUe, UeState};
use ue_antenna::sim::rng::{substream, Purpose};
use ue_antenna::sphere_geom::{polarization_angle, rotation_matrix, transform_direction, unit_vector_and_basis, Direction, RotationAngles};

fn angles() -> impl Strategy<Value = RotationAngles<f64>> {
    (-180.0..180.0f64, -90.0..90.0f64, -180.0..180.0f64).prop_map(|(a, b, g)| RotationAngles::new(a, b, g))
}

fn off_pole() -> impl Strategy<Value = (f64, f64)> {
    (1.0..179.0f64, -180.0..180.0f64)
}

fn scenario() -> impl Strategy<Value = BlockageScenario> {
    prop::sample::select(BlockageScenario::ALL.to_vec())
}

fn mat_mul(a: &[[f64; 3]; 3], b: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            m[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    m
}

fn mat_vec(m: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2])
}

fn mat_t_vec(m: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| m[0][i] * v[0] + m[1][i] * v[1] + m[2][i] * v[2])
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn direction_round_trip(a in angles(), (t, p) in off_pole()) {
        let r = rotation_matrix(&a);
        let d = Direction::gcs(t, p).unwrap();
        let primed = transform_direction(&r, &d, true);
        prop_assume!(!primed.is_near_pole());
        let back = transform_direction(&r, &primed, false);
        prop_assert!((back.theta() - t).abs() < 1e-9);
        let dphi = ue_antenna::scalar::wrap_deg(back.phi() - p).abs();
        prop_assert!(dphi < 1e-9);
    }

    #[test]
    fn rotation_is_proper_orthonormal(a in angles()) {
        let r = rotation_matrix(&a);
        prop_assert!(r.orthonormality_error() < 1e-12);
        prop_assert!((r.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn composition_matches_matrix_product(a in angles(), b in angles(), v in prop::array::uniform3(-1.0..1.0f64)) {
        let (ra, rb) = (rotation_matrix(&a), rotation_matrix(&b));
        let c = ra.compose(&rb);
        let oracle = mat_mul(ra.matrix(), rb.matrix());
        let got = c.apply(&v);
        let want = mat_vec(&oracle, &v);
        for i in 0..3 {
            prop_assert!((got[i] - want[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn polarization_rotation_is_unitary(a in angles(), (t, p) in off_pole(), ft in -3.0..3.0f64, fp in -3.0..3.0f64) {
        let r = rotation_matrix(&a);
        let d = Direction::gcs(t, p).unwrap();
        prop_assume!(!transform_direction(&r, &d, true).is_near_pole());
        let psi = polarization_angle(&r, &d).unwrap();
        prop_assert!((psi.cos_psi.powi(2) + psi.sin_psi.powi(2) - 1.0).abs() < 1e-12);
        let (gt, gp) = psi.apply(ft, fp);
        prop_assert!(((gt * gt + gp * gp) - (ft * ft + fp * fp)).abs() <= 1e-12 * (1.0 + ft * ft + fp * fp));
    }

    #[test]
    fn pattern_bounded_and_symmetric(t in 0.0..=180.0f64, p in -180.0..=180.0f64) {
        let pat = PatternParams::<f64>::directive_default();
        let g = pat.gain_db_at(t, p);
        prop_assert!(g <= 5.3 && g >= 5.3 - 22.5);
        prop_assert_eq!(g, pat.gain_db_at(t, -p));
        prop_assert!((g - pat.gain_db_at(180.0 - t, p)).abs() < 1e-12);
    }

    #[test]
    fn pattern_field_matches_gain(t in 0.5..179.5f64, p in -180.0..180.0f64) {
        let pat = PatternParams::<f64>::directive_default();
        let d = Direction::acs(t, p).unwrap();
        let f = pat.field_pair(&d);
        prop_assert_eq!(f.f_phi, 0.0);
        prop_assert!((10.0 * f.power().log10() - pat.gain_db(&d)).abs() < 1e-12);
    }

    /// The polarization chain must agree with rotating the antenna-frame
    /// field vector into the global frame and projecting it onto the
    /// global spherical basis.
    #[test]
    fn chain_matches_vector_projection(ue in angles(), (t, p) in off_pole(), id in 1u32..=8) {
        let layout = reference_handset::<f64>();
        let el = *layout.element(id).unwrap();
        let u = UeState::free_space(layout, ue, 3.5e9);
        let prepared = PreparedUe::new(&u, &AttenuationTable::example()).unwrap();
        let d = Direction::gcs(t, p).unwrap();

        let total = mat_mul(rotation_matrix(&ue).matrix(), rotation_matrix(&el.orientation).matrix());
        let rho = unit_vector_and_basis(&d).rho;
        let local = Direction::from_vector(mat_t_vec(&total, &rho), ue_antenna::Frame::Acs);
        prop_assume!(!local.is_near_pole() && !transform_direction(&rotation_matrix(&ue), &d, true).is_near_pole());
        let amp = 10f64.powf(el.pattern.gain_db(&local) / 20.0);
        let e_local = unit_vector_and_basis(&local).theta.map(|x| x * amp);
        let e = mat_vec(&total, &e_local);
        let basis = unit_vector_and_basis(&d);

        let f = prepared.antenna_field(id, &d).unwrap();
        prop_assert!((f.f_theta - dot(&e, &basis.theta)).abs() < 1e-9);
        prop_assert!((f.f_phi - dot(&e, &basis.phi)).abs() < 1e-9);
        prop_assert!((f.power() - amp * amp).abs() <= 1e-9 * amp * amp);
    }

    #[test]
    fn combining_bounded_by_total_power(fs in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..6)) {
        let fields: Vec<FieldPair<f64>> = fs.iter().map(|&(a, b)| FieldPair::new(a, b)).collect();
        let c = combine_coherent(&fields, &equal_weights(fields.len()), None).unwrap();
        let total: f64 = fields.iter().map(|f| f.power()).sum();
        prop_assert!(c.power() <= total * (1.0 + 1e-12) + 1e-15);
    }

    #[test]
    fn combining_ignores_weight_scale(fs in prop::collection::vec((-2.0..2.0f64, -2.0..2.0f64), 1..6), k in 0.01..100.0f64) {
        let fields: Vec<FieldPair<f64>> = fs.iter().map(|&(a, b)| FieldPair::new(a, b)).collect();
        let w = equal_weights::<f64>(fields.len());
        let scaled: Vec<Complex<f64>> = w.iter().map(|x| x * k).collect();
        let a = combine_coherent(&fields, &w, None).unwrap().power();
        let b = combine_coherent(&fields, &scaled, None).unwrap().power();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a));
    }

    #[test]
    fn validation_ignores_id_order(ids in prop::collection::vec(0u32..12, 0..10), carrier in prop::sample::select(vec![0.8e9, 2.0e9, 3.5e9])) {
        let layout = reference_handset::<f64>();
        let mut reversed = ids.clone();
        reversed.reverse();
        let key = |v: Vec<ue_antenna::LayoutViolation>| {
            let mut s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
            s.sort();
            s
        };
        prop_assert_eq!(key(validate(&layout, carrier, &ids)), key(validate(&layout, carrier, &reversed)));
    }

    #[test]
    fn substreams_are_reproducible(seed in any::<u64>(), rep in 0u64..10_000) {
        let draw = |p| {
            let mut r = substream(seed, rep, p);
            (0..4).map(|_| r.next_u64()).collect::<Vec<_>>()
        };
        prop_assert_eq!(draw(Purpose::Scenario), draw(Purpose::Scenario));
        prop_assert_ne!(draw(Purpose::Scenario), draw(Purpose::Orientation));
        prop_assert_ne!(draw(Purpose::Orientation), draw(Purpose::PortLoss));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Spinning the handset about the vertical by whole grid steps only
    /// permutes grid columns.
    #[test]
    fn imbalance_invariant_under_azimuth_spin(k in -90i32..90) {
        let table = AttenuationTable::example();
        let ids: Vec<u32> = (1..=8).collect();
        let base = UeState::free_space(reference_handset(), RotationAngles::zero(), 3.5e9);
        let spun = UeState::free_space(reference_handset(), RotationAngles::new(2.0 * k as f64, 0.0, 0.0), 3.5e9);
        let a = imbalance_stats(&sphere_sweep(&base, &table, 2.0, 2.0).unwrap(), &ids).unwrap();
        let b = imbalance_stats(&sphere_sweep(&spun, &table, 2.0, 2.0).unwrap(), &ids).unwrap();
        prop_assert!((a.max_db - b.max_db).abs() < 1e-9);
        prop_assert!((a.mean_db() - b.mean_db()).abs() < 1e-9);
    }

    /// Scenario and port losses shift each port's gain by a constant.
    #[test]
    fn losses_shift_gain_linearly(s in scenario(), ue in angles(), losses in prop::collection::vec(0.0..6.0f64, 8)) {
        let table = AttenuationTable::example();
        let free = UeState::free_space(reference_handset(), ue, 2.0e9);
        let lossy = UeState::new(reference_handset(), ue, s, 2.0e9, losses.clone()).unwrap();
        let a = sphere_sweep(&free, &table, 5.0, 5.0).unwrap();
        let b = sphere_sweep(&lossy, &table, 5.0, 5.0).unwrap();
        for (port, id) in (1..=8u32).enumerate() {
            let shift = table.element_attenuation_db(s, id, 2.0e9).unwrap() + losses[port];
            for k in 0..a.len() {
                if a.gain_db[port][k] > -300.0 {
                    prop_assert!((a.gain_db[port][k] - b.gain_db[port][k] - shift).abs() < 1e-9);
                }
            }
        }
    }
}
