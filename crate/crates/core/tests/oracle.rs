mod common;

use common::{random_instance, Case, Law};
use markov_gof::{
    DeviationProcess, Family, InnovationDistribution, ModelSpec, Series, TestVariant,
};

#[test]
fn sweep_matches_brute_force() {
    let mut checked = 0;
    for i in 0..300 {
        let Some(inst) = random_instance(0xA11CE, i, 30) else {
            continue;
        };
        let stat = DeviationProcess::new(&inst.series, &inst.variant, inst.fitted.as_ref())
            .unwrap()
            .sup_statistic();
        let brute = inst.case.brute_force_sup();
        assert!(
            (stat.s_n - brute).abs() <= 1e-10,
            "instance {i} ({}): sweep {} vs brute force {brute}",
            inst.variant.name(),
            stat.s_n
        );
        checked += 1;
    }
    assert!(checked > 250, "only {checked} usable instances");
}

#[test]
fn reported_argmax_attains_statistic() {
    for i in 0..100 {
        let Some(inst) = random_instance(0xBEEF, i, 40) else {
            continue;
        };
        let stat = DeviationProcess::new(&inst.series, &inst.variant, inst.fitted.as_ref())
            .unwrap()
            .sup_statistic();
        let left = stat.arg_y.side == markov_gof::Side::LeftLimit;
        let u = inst.case.u(&stat.arg_x, stat.arg_y.value, left);
        assert!(
            (u.abs() - stat.s_n).abs() <= 1e-10,
            "instance {i}: |U(arg)| = {} vs {}",
            u.abs(),
            stat.s_n
        );
    }
}

#[test]
fn no_mesh_point_beats_the_grid() {
    for i in 0..60 {
        let Some(inst) = random_instance(0xD0E, i, 25) else {
            continue;
        };
        let stat = DeviationProcess::new(&inst.series, &inst.variant, inst.fitted.as_ref())
            .unwrap()
            .sup_statistic();
        let mesh = inst.case.dense_mesh_sup(50);
        assert!(
            mesh <= stat.s_n + 1e-12,
            "instance {i}: mesh {mesh} > grid {}",
            stat.s_n
        );
    }
}

#[test]
fn hand_example_through_oracle() {
    // (X0, X1, X2) = (0, 0.5, -0.3) against a fully specified N(0,1) i.i.d. null
    let case = Case {
        data: vec![0.0, 0.5, -0.3],
        p: 1,
        family: Family::Iid,
        theta: vec![],
        law: Law::Normal,
    };
    assert!(case.u(&[f64::INFINITY], 0.0, false).abs() < 1e-15);
    assert!((case.u(&[0.0], 0.0, false) + 0.353_553_390_593_273_8).abs() < 1e-12);
    let phi = 0.382_088_577_811_047_5; // Phi(-0.3)
    let expected = 2.0 * phi / 2f64.sqrt();
    assert!((case.brute_force_sup() - expected).abs() < 1e-12);

    let series = Series::new(vec![0.0, 0.5, -0.3], 1).unwrap();
    let spec = ModelSpec::iid(1, InnovationDistribution::StdNormal).unwrap();
    let stat =
        markov_gof::sup_statistic(&series, &TestVariant::FullySpecified(spec), None).unwrap();
    assert!((stat.s_n - expected).abs() < 1e-12);
}

#[test]
#[allow(clippy::excessive_precision)]
fn oracle_normal_cdf_matches_high_precision_values() {
    // 30-digit reference values; the far tail loses a few ulps to rounding of w / sqrt(2)
    let table = [
        (-5.5, 1.898_956_246_588_771_938_4e-8),
        (-2.1, 0.017_864_420_562_816_556_784),
        (-0.7, 0.241_963_652_223_073_014_75),
        (0.45, 0.673_644_779_712_079_974_23),
        (1.6, 0.945_200_708_300_442_006_04),
        (3.3, 0.999_516_575_857_616_222_8),
    ];
    for (w, want) in table {
        let got = common::normal_cdf(w);
        assert!(((got - want) / want).abs() < 1e-14, "{w}: {got} vs {want}");
    }
}
