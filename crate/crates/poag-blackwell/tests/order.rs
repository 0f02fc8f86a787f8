use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use poag_blackwell::{
    at_most_as_informative, at_most_as_informative_with, strictly_more_informative, Arith, GarblingMatrix,
    ObservationFamily, WITNESS_TOL,
};
use proptest::prelude::*;

fn fam(rows: &[&[f64]]) -> ObservationFamily {
    ObservationFamily::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
}

/// Exact rows of a family; each row is a weight vector normalized over the rationals.
type Exact = Vec<Vec<BigRational>>;

fn exact_of(weights: &[Vec<u32>]) -> Exact {
    weights
        .iter()
        .map(|w| {
            let t: u32 = w.iter().sum();
            w.iter().map(|&x| BigRational::new(x.into(), t.into())).collect()
        })
        .collect()
}

fn float_of(weights: &[Vec<u32>]) -> ObservationFamily {
    let rows = weights
        .iter()
        .map(|w| {
            let t: u32 = w.iter().sum();
            w.iter().map(|&x| x as f64 / t as f64).collect()
        })
        .collect();
    ObservationFamily::from_rows(rows).unwrap()
}

fn exact_of_floats(f: &ObservationFamily) -> Exact {
    f.dists.iter().map(|d| d.iter().map(|&x| BigRational::from_float(x).unwrap()).collect()).collect()
}

/// Gaussian elimination over the rationals on `F p = phat` with column sums 1.
/// Returns `Some(false)` when the equality system alone is inconsistent, `Some(true)` when the
/// solution is unique and nonnegative, and `None` when the system is underdetermined.
fn rational_oracle(phat: &Exact, p: &Exact) -> Option<bool> {
    let n = p[0].len();
    let nv = n * n;
    let mut rows: Vec<Vec<BigRational>> = Vec::new();
    for inp in 0..n {
        let mut r = vec![BigRational::zero(); nv + 1];
        for out in 0..n {
            r[out * n + inp] = BigRational::one();
        }
        r[nv] = BigRational::one();
        rows.push(r);
    }
    for (d, dh) in p.iter().zip(phat) {
        for out in 0..n {
            let mut r = vec![BigRational::zero(); nv + 1];
            for inp in 0..n {
                r[out * n + inp] = d[inp].clone();
            }
            r[nv] = dh[out].clone();
            rows.push(r);
        }
    }
    let mut rank = 0;
    for c in 0..nv {
        let Some(pr) = (rank..rows.len()).find(|&i| !rows[i][c].is_zero()) else { continue };
        rows.swap(rank, pr);
        let pv = rows[rank][c].clone();
        for v in rows[rank].iter_mut() {
            *v = v.clone() / pv.clone();
        }
        let prow = rows[rank].clone();
        for (i, r) in rows.iter_mut().enumerate() {
            if i != rank && !r[c].is_zero() {
                let f = r[c].clone();
                for (v, pv) in r.iter_mut().zip(&prow) {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
        }
        rank += 1;
    }
    if rows[rank..].iter().any(|r| !r[nv].is_zero()) {
        return Some(false);
    }
    if rank < nv {
        return None;
    }
    Some(rows[..rank].iter().all(|r| !r[nv].is_negative()))
}

#[test]
fn constant_family_cannot_produce_perfect_observation() {
    let constant = fam(&[&[1.0, 0.0], &[1.0, 0.0]]);
    let perfect = fam(&[&[1.0, 0.0], &[0.0, 1.0]]);
    assert!(at_most_as_informative(&perfect, &constant).unwrap().is_none());
    assert_eq!(rational_oracle(&exact_of_floats(&perfect), &exact_of_floats(&constant)), Some(false));
    for arith in [Arith::Float, Arith::Exact] {
        assert!(at_most_as_informative_with(&perfect, &constant, arith).unwrap().is_none());
    }
}

#[test]
fn constant_null_is_a_garbling_of_perfect() {
    let perfect = fam(&[&[1.0, 0.0], &[0.0, 1.0]]);
    let null = fam(&[&[1.0, 0.0], &[1.0, 0.0]]);
    let f = at_most_as_informative(&null, &perfect).unwrap().unwrap();
    assert_eq!(f.entries, vec![vec![1.0, 1.0], vec![0.0, 0.0]]);
}

#[test]
fn disjoint_aspects_are_incomparable() {
    // States (b1, b2) in order 00, 01, 10, 11; observations 0 and 1.
    let first = fam(&[&[1.0, 0.0], &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]]);
    let second = fam(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[0.0, 1.0]]);
    assert!(!strictly_more_informative(&first, &second).unwrap());
    assert!(!strictly_more_informative(&second, &first).unwrap());
    assert!(at_most_as_informative(&first, &second).unwrap().is_none());
    assert!(at_most_as_informative(&second, &first).unwrap().is_none());
    assert_eq!(rational_oracle(&exact_of_floats(&first), &exact_of_floats(&second)), Some(false));
}

#[test]
fn noisy_infeasible_instance_agrees_with_oracle() {
    // A symmetric binary channel cannot be sharpened.
    let noisy = fam(&[&[0.75, 0.25], &[0.25, 0.75]]);
    let sharp = fam(&[&[0.9, 0.1], &[0.1, 0.9]]);
    assert_eq!(rational_oracle(&exact_of(&[vec![9, 1], vec![1, 9]]), &exact_of(&[vec![3, 1], vec![1, 3]])), Some(false));
    assert!(at_most_as_informative(&sharp, &noisy).unwrap().is_none());
    assert!(at_most_as_informative(&noisy, &sharp).unwrap().is_some());
}

fn weights(ns: usize, no: usize) -> impl Strategy<Value = Vec<Vec<u32>>> {
    prop::collection::vec(
        prop::collection::vec(0u32..6, no).prop_map(|w| if w.iter().all(|&x| x == 0) { vec![1; w.len()] } else { w }),
        ns,
    )
}

fn dist(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u32..6, n).prop_map(|w| {
        let w: Vec<f64> = if w.iter().all(|&x| x == 0) { vec![1.0; w.len()] } else { w.iter().map(|&x| x as f64).collect() };
        let t: f64 = w.iter().sum();
        w.iter().map(|x| x / t).collect()
    })
}

fn family(ns: usize, no: usize) -> impl Strategy<Value = ObservationFamily> {
    prop::collection::vec(dist(no), ns).prop_map(|d| ObservationFamily::from_rows(d).unwrap())
}

fn garbling(no: usize) -> impl Strategy<Value = GarblingMatrix> {
    prop::collection::vec(dist(no), no).prop_map(move |cols| GarblingMatrix {
        entries: (0..no).map(|out| (0..no).map(|inp| cols[inp][out]).collect()).collect(),
    })
}

fn sizes() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=4, 1usize..=4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn reflexivity(p in sizes().prop_flat_map(|(ns, no)| family(ns, no))) {
        let w = at_most_as_informative(&p, &p).unwrap();
        prop_assert!(w.is_some());
        prop_assert!(w.unwrap().residual(&p, &p) <= WITNESS_TOL);
    }

    #[test]
    fn garbling_closure_and_witness_soundness(
        (p, f) in sizes().prop_flat_map(|(ns, no)| (family(ns, no), garbling(no)))
    ) {
        prop_assert!(f.is_stochastic(1e-9));
        let phat = f.garble(&p);
        let w = at_most_as_informative(&phat, &p).unwrap();
        prop_assert!(w.is_some());
        let w = w.unwrap();
        prop_assert!(w.is_stochastic(1e-7));
        prop_assert!(w.residual(&phat, &p) <= WITNESS_TOL);
    }

    #[test]
    fn transitivity(
        (p, f, g) in sizes().prop_flat_map(|(ns, no)| (family(ns, no), garbling(no), garbling(no)))
    ) {
        let q = f.garble(&p);
        let r = g.garble(&q);
        prop_assert!(at_most_as_informative(&q, &p).unwrap().is_some());
        prop_assert!(at_most_as_informative(&r, &q).unwrap().is_some());
        prop_assert!(at_most_as_informative(&r, &p).unwrap().is_some());
    }

    #[test]
    fn transitivity_on_arbitrary_triples(
        (a, b, c) in sizes().prop_flat_map(|(ns, no)| (family(ns, no), family(ns, no), family(ns, no)))
    ) {
        let ab = at_most_as_informative(&a, &b).unwrap().is_some();
        let bc = at_most_as_informative(&b, &c).unwrap().is_some();
        if ab && bc {
            prop_assert!(at_most_as_informative(&a, &c).unwrap().is_some());
        }
    }

    #[test]
    fn float_and_exact_agree_with_oracle_when_determined(
        (a, b) in sizes().prop_flat_map(|(ns, no)| (weights(ns, no), weights(ns, no)))
    ) {
        let (fa, fb) = (float_of(&a), float_of(&b));
        let float = at_most_as_informative(&fa, &fb).unwrap().is_some();
        let exact = at_most_as_informative_with(&fa, &fb, Arith::Exact).unwrap().is_some();
        prop_assert_eq!(float, exact);
        if let Some(expected) = rational_oracle(&exact_of(&a), &exact_of(&b)) {
            prop_assert_eq!(float, expected);
        }
    }
}
