//! Piece detection on an instance whose breakpoint is known in closed form.

use bctree::bnc::{params, BncConfig, CutPlane};
use bctree::experiments::{find_pieces, Axis, ScanProblem, ScanSettings};
use bctree::ip::{IpInstance, LinearConstraint, RowOrigin};
use bctree::lp::Sense;
use bctree::scoring::ScoreRuleId;
use bctree::tree::Limits;

// max x0 + 2 x1 s.t. 2 x0 + 2 x1 <= 3 has LP optimum (0.5, 1). The cut
// x0 <= 0 has efficacy 1/2 and parallelism 1/sqrt(5); x0 + x1 <= 1 has
// efficacy 1/(2 sqrt 2) and parallelism 3/sqrt(10). Their combined cut
// scores cross at this weight (computed to 40 digits).
const CROSSING: f64 = 0.773_972_954_988_079_3;

fn problem(pool: Vec<CutPlane>) -> ScanProblem {
    let row = LinearConstraint::new(vec![2.0, 2.0], Sense::Le, 3.0, RowOrigin::Original);
    let ip = IpInstance::binary(vec![1.0, 2.0], vec![row]).unwrap();
    let config = BncConfig { cuts_per_node: 1, ..BncConfig::default() };
    let params = params(
        0.5,
        0.5,
        1.0,
        (ScoreRuleId::MostFractional, ScoreRuleId::MostFractional),
        (ScoreRuleId::Efficacy, ScoreRuleId::Parallelism),
        4,
    );
    ScanProblem { ip, pool, config, params, limits: Limits::default() }
}

fn cut_a() -> CutPlane {
    CutPlane::new(vec![1.0, 0.0], 0.0).unwrap()
}

fn cut_b() -> CutPlane {
    CutPlane::new(vec![1.0, 1.0], 1.0).unwrap()
}

#[test]
fn crossing_scores_give_two_pieces_at_the_crossing() {
    let report = find_pieces(&problem(vec![cut_a(), cut_b()]), Axis::MuCut, &ScanSettings::default()).unwrap();
    assert!(report.consistent);
    assert_eq!(report.piece_count(), 2);
    let (left, right) = (&report.pieces[0], &report.pieces[1]);
    assert_eq!(left.lo, 0.0);
    assert_eq!(right.hi, 1.0);
    assert_ne!(left.digest, right.digest);
    assert!((left.hi - CROSSING).abs() < 1e-12, "breakpoint {} vs {}", left.hi, CROSSING);
    assert!(right.lo > left.hi);
    assert!(report.within_cap());
}

#[test]
fn pool_order_does_not_move_the_breakpoint() {
    let report = find_pieces(&problem(vec![cut_b(), cut_a()]), Axis::MuCut, &ScanSettings::default()).unwrap();
    assert_eq!(report.piece_count(), 2);
    assert!((report.pieces[0].hi - CROSSING).abs() < 1e-12);
}

#[test]
fn single_candidate_gives_one_piece() {
    let p = problem(vec![cut_a()]);
    for axis in [Axis::MuCut, Axis::MuBranch, Axis::Lambda] {
        let report = find_pieces(&p, axis, &ScanSettings::default()).unwrap();
        assert!(report.consistent);
        assert_eq!(report.piece_count(), 1, "{axis:?}");
        assert_eq!((report.pieces[0].lo, report.pieces[0].hi), (0.0, 1.0));
    }
}
