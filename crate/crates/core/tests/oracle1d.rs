use moverfv::validate::eoc::eoc;
use moverfv::validate::oracle::*;

#[test]
fn smooth_linear_transport_converges_at_first_order() {
    let ns = [64usize, 128, 256, 512, 1024];
    let e: Vec<f64> = linear_transport_errors(&ns, ORACLE_CFL).unwrap();
    for i in 1..ns.len() {
        assert!(e[i] < e[i - 1]);
        let order = eoc((1.0 / ns[i - 1] as f64, e[i - 1]), (1.0 / ns[i] as f64, e[i]));
        assert!(order >= 0.8, "n={}: {order}", ns[i]);
    }
}

#[test]
fn constant_states_grow_exactly() {
    for c in [0.8, 1.0, 3.0] {
        assert!(constant_state_defect(64, c, 1.0).unwrap() <= 1e-14);
    }
}

#[test]
fn entropy_residual_decreases_for_a_shock() {
    let r: Vec<f64> = burgers_entropy_residuals(&[128, 256, 512], 0.5, ORACLE_CFL).unwrap();
    assert!(r[0] > r[1] && r[1] > r[2], "{r:?}");
    assert!(r.iter().all(|&x| x >= 0.0));
}

#[test]
fn viscous_solutions_approach_the_inviscid_one() {
    let d: Vec<f64> = vanishing_viscosity_distances(512, &[1e-3, 1e-4], 0.5, ORACLE_CFL).unwrap();
    assert!(d[0] > d[1], "{d:?}");
}
