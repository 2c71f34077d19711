use super::*;
use crate::error::Error;

fn line(ratios: &[f64], shifts: &[f64]) -> IfsSystem {
    let maps = ratios
        .iter()
        .zip(shifts)
        .map(|(&r, &b)| SimilarityMap::new(r, vec![1.0], vec![b]).unwrap())
        .collect();
    IfsSystem::new(maps, None).unwrap()
}

#[test]
fn similarity_dimension_examples() {
    let third = SimilarityMap::new(1.0 / 3.0, vec![1.0], vec![0.0]).unwrap();
    let s = similarity_dimension(&[third.clone(), third.clone()]).unwrap();
    assert!((s - 2f64.ln() / 3f64.ln()).abs() < 1e-12);
    let half = SimilarityMap::new(0.5, vec![1.0], vec![0.0]).unwrap();
    assert_eq!(similarity_dimension(&[half]).unwrap(), 0.0);
    assert!(similarity_dimension(&[]).is_err());
}

#[test]
fn compose_word_examples() {
    let c = preset("cantor3").unwrap();
    let id = c.compose_word(&Word::default()).unwrap();
    assert_eq!(id.ratio(), 1.0);
    assert_eq!(id.translation(), &[0.0]);
    let h = c.compose_word(&Word(vec![1, 0])).unwrap();
    assert!((h.ratio() - 1.0 / 9.0).abs() < 1e-16);
    assert!((h.translation()[0] - 2.0 / 3.0).abs() < 1e-16);
    assert!(matches!(c.compose_word(&Word(vec![2])), Err(Error::InvalidInput(_))));
}

#[test]
fn rho_cocycle_examples_and_split() {
    let c = preset("cantor3").unwrap();
    let w = Word(vec![0, 1]);
    assert_eq!(c.rho_cocycle(&w, 0).unwrap(), 1.0);
    assert!((c.rho_cocycle(&w, 2).unwrap() - 1.0 / 9.0).abs() < 1e-16);
    assert!(c.rho_cocycle(&w, 3).is_err());
    let f = line(&[0.5, 0.25], &[0.0, 0.75]);
    let w = Word(vec![0, 1, 1, 0, 1]);
    for m in 0..=5 {
        for n in 0..=(5 - m) {
            let lhs = f.rho_cocycle(&w, m + n).unwrap();
            let rhs = f.rho_cocycle(&w, m).unwrap() * f.rho_cocycle(&w.shift(m), n).unwrap();
            assert!((lhs - rhs).abs() <= 1e-16);
        }
    }
}

#[test]
fn code_point_examples() {
    let c = preset("cantor3").unwrap();
    assert_eq!(c.code_point(&Word(vec![0; 6])).unwrap(), vec![0.0]);
    assert!((c.code_point(&Word(vec![1; 6])).unwrap()[0] - 1.0).abs() < 1e-15);
    let mut w = vec![0u8];
    w.extend(std::iter::repeat_n(1, 7));
    let p = c.code_point(&Word(w)).unwrap()[0];
    assert!((p - 1.0 / 3.0).abs() <= 3f64.powi(-8));
    assert!(c.code_point(&Word::default()).is_err());
}

#[test]
fn cylinder_diameter_and_mass() {
    let c = preset("cantor3x3").unwrap();
    let w = Word(vec![1, 3, 2]);
    let cyl = c.cylinder(&w).unwrap();
    assert_eq!(cyl.diameter, c.diam_k() * c.rho_cocycle(&w, 3).unwrap());
    assert!((cyl.mass - 1.0 / 64.0).abs() < 1e-15);
}

#[test]
fn sampling_frequencies() {
    let c = preset("cantor3").unwrap();
    let n = 100_000;
    let pts = c.sample_measure(7, 20, n).unwrap();
    let left = pts.iter().filter(|p| p[0] <= 1.0 / 3.0 + 1e-12).count() as f64 / n as f64;
    let sigma = (0.25 / n as f64).sqrt();
    assert!((left - 0.5).abs() < 4.0 * sigma);
    assert_eq!(pts, c.sample_measure(7, 20, n).unwrap());

    let cc = preset("cantor3x3").unwrap();
    let words = cc.sample_words(11, 2, n);
    let hits = words.iter().filter(|w| w.0 == [2, 1]).count() as f64 / n as f64;
    let sigma = (1.0 / 16.0 * 15.0 / 16.0 / n as f64).sqrt();
    assert!((hits - 1.0 / 16.0).abs() < 4.0 * sigma);
}

#[test]
fn assign_word_examples() {
    let c = preset("cantor3").unwrap();
    assert_eq!(c.assign_word(&[0.0], 2).unwrap(), Word(vec![0, 0]));
    assert_eq!(c.assign_word(&[1.0 / 3.0], 1).unwrap(), Word(vec![0]));
    assert!(matches!(c.assign_word(&[0.5], 1), Err(Error::OutsideAttractor)));

    let g = preset("sierpinski3").unwrap();
    // (1/2, 0) is the corner shared by the triangles of maps 0 and 1.
    assert_eq!(g.assign_word(&[0.5, 0.0], 1).unwrap(), Word(vec![1]));
    // (1/4, √3/4) is shared by maps 0 and 2.
    let h = 3f64.sqrt() / 4.0;
    assert_eq!(g.assign_word(&[0.25, h], 1).unwrap(), Word(vec![2]));
}

#[test]
fn complete_prefix_examples() {
    let c = preset("cantor3x3").unwrap();
    let set = c.complete_prefix_set(3f64.powi(-3)).unwrap();
    assert_eq!(set, c.words(3));
    let f = line(&[0.5, 0.25], &[0.0, 0.75]);
    let set = f.complete_prefix_set(0.25).unwrap();
    assert_eq!(set, vec![Word(vec![0, 0]), Word(vec![0, 1]), Word(vec![1])]);
    assert_eq!(preset("cantor3").unwrap().complete_prefix_set(0.9).unwrap().len(), 2);
    assert!(c.complete_prefix_set(1.0).is_err());
}

#[test]
fn enclosures_of_presets() {
    let c = preset("cantor3x3").unwrap();
    assert!((c.diam_k() - 2f64.sqrt()).abs() < 1e-9);
    assert!((c.norm_bound() - 2f64.sqrt()).abs() < 1e-9);
    let g = preset("sierpinski3").unwrap();
    let e = g.enclosure();
    assert!(e.lo[0].abs() < 1e-9 && (e.hi[0] - 1.0).abs() < 1e-9);
    assert!((e.hi[1] - 3f64.sqrt() / 2.0).abs() < 1e-9);
}

#[test]
fn osc_witness_is_checked() {
    let maps = vec![
        SimilarityMap::new(0.5, vec![1.0], vec![0.0]).unwrap(),
        SimilarityMap::new(0.5, vec![1.0], vec![0.25]).unwrap(),
    ];
    let w = AxisBox::new(vec![0.0], vec![1.0]).unwrap();
    assert!(IfsSystem::new(maps, Some(w)).is_err());
}
