use dynpolar::angles::{dynamic_angle, AxisField};
use dynpolar::dpd::{decompose, decompose_by_odes, process_residual};
use dynpolar::integrate::deformation_history;
use dynpolar::polar::polar_decompose;
use dynpolar::{Mat, TimeGrid, Vector, VelocityField};
use proptest::prelude::*;

fn gradient3() -> impl Strategy<Value = Mat> {
    proptest::array::uniform9(-1.0f64..1.0).prop_map(|a| Mat::from_row_slice(&a).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_fields_decompose_consistently(g in gradient3()) {
        let field = VelocityField::linear(g);
        let x0 = Vector::new3(0.2, -0.1, 0.4);
        let grid = TimeGrid::new(0.0, 1.0, 200).unwrap();
        let (traj, hist) = deformation_history(&field, &x0, &grid).unwrap();
        let (_, dpd) = decompose(&traj).unwrap();
        prop_assert!(dpd.reconstruction_residual(&hist).unwrap() < 1e-10);
        for o in &dpd.o {
            prop_assert!(o.orthogonality_residual() < 1e-10);
            prop_assert!((o.det() - 1.0).abs() < 1e-10);
        }
        prop_assert!(process_residual(&traj, 80).unwrap() < 1e-10);

        let by_odes = decompose_by_odes(&field, &x0, &grid).unwrap();
        for k in [50, 200] {
            prop_assert!((by_odes.m[k] - dpd.m[k]).norm() < 1e-7 * (1.0 + dpd.m[k].norm()));
            prop_assert!((by_odes.n[k] - dpd.n[k]).norm() < 1e-7 * (1.0 + dpd.n[k].norm()));
        }
    }
}

#[test]
fn planar_shear_dynamic_and_polar_rotations_differ() {
    let k = 1.0;
    let field = VelocityField::linear(Mat::from_rows2([[0.0, k], [0.0, 0.0]]));
    let grid = TimeGrid::new(0.0, 4.0, 400).unwrap();
    let (traj, hist) = deformation_history(&field, &Vector::new2(0.0, 0.5), &grid).unwrap();
    let phi = dynamic_angle(&traj, &AxisField::Planar).unwrap();
    assert!((phi.last() + 2.0).abs() < 1e-12);
    let r = polar_decompose(hist.last()).unwrap().r;
    assert!((r.get(1, 0).atan2(r.get(0, 0)) + 2f64.atan()).abs() < 1e-10);
}
