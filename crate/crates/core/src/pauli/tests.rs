use super::*;
use num_complex::Complex64;
use proptest::prelude::*;

type Mat = Vec<Vec<Complex64>>;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn letter_matrix(l: Letter) -> Mat {
    let z = c(0.0, 0.0);
    let o = c(1.0, 0.0);
    match l {
        Letter::I => vec![vec![o, z], vec![z, o]],
        Letter::X => vec![vec![z, o], vec![o, z]],
        Letter::Y => vec![vec![z, c(0.0, -1.0)], vec![c(0.0, 1.0), z]],
        Letter::Z => vec![vec![o, z], vec![z, -o]],
    }
}

fn kron(a: &Mat, b: &Mat) -> Mat {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn matmul(a: &Mat, b: &Mat) -> Mat {
    let n = a.len();
    let mut out = vec![vec![c(0.0, 0.0); n]; n];
    for i in 0..n {
        for k in 0..n {
            for j in 0..n {
                out[i][j] += a[i][k] * b[k][j];
            }
        }
    }
    out
}

/// Dense matrix built letter by letter from the printed form.
fn dense(p: &PauliOperator) -> Mat {
    let mut m: Mat = vec![vec![c(1.0, 0.0)]];
    // qubit 0 is the least significant index bit, so it is the rightmost factor
    for q in (0..p.num_qubits()).rev() {
        m = kron(&m, &letter_matrix(p.letter(q)));
    }
    let f = match p.display_phase() {
        Phase::PlusOne => c(1.0, 0.0),
        Phase::PlusI => c(0.0, 1.0),
        Phase::MinusOne => c(-1.0, 0.0),
        Phase::MinusI => c(0.0, -1.0),
    };
    m.iter()
        .map(|r| r.iter().map(|v| v * f).collect())
        .collect()
}

fn close(a: &Mat, b: &Mat) -> bool {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .all(|(x, y)| (x - y).norm() < 1e-12)
}

fn p(s: &str) -> PauliOperator {
    s.parse().unwrap()
}

#[test]
fn x_times_z_is_minus_i_y() {
    let r = p("+X").multiply(&p("+Z")).unwrap();
    assert_eq!(r.to_string(), "-iY");
    assert!(close(&dense(&r), &matmul(&dense(&p("X")), &dense(&p("Z")))));
}

#[test]
fn xx_times_zz_is_minus_yy() {
    let r = p("+XX").multiply(&p("+ZZ")).unwrap();
    assert_eq!(r.to_string(), "-YY");
    assert_eq!(r.sign(), Some(Sign::Minus));
    assert!(close(&dense(&r), &matmul(&dense(&p("XX")), &dense(&p("ZZ")))));
}

#[test]
fn commutation_examples() {
    assert!(p("XIZ").commutes(&p("ZIX")).unwrap());
    assert!(!p("XI").commutes(&p("ZI")).unwrap());
    assert!(p("XX").commutes(&p("ZZ")).unwrap());
    assert!(matches!(
        p("XX").commutes(&p("X")),
        Err(PauliError::DimensionMismatch { .. })
    ));
}

#[test]
fn weight_ignores_sign() {
    assert_eq!(p("-XZZXI").weight(), 4);
    assert_eq!(p("-XZZXI").support(), vec![0, 1, 2, 3]);
    assert_eq!(p("IIII").weight(), 0);
}

#[test]
fn parse_errors() {
    assert_eq!("".parse::<PauliOperator>(), Err(PauliError::Empty));
    assert_eq!("-".parse::<PauliOperator>(), Err(PauliError::Empty));
    assert_eq!(
        "XQZ".parse::<PauliOperator>(),
        Err(PauliError::IllegalCharacter { ch: 'Q', pos: 1 })
    );
    assert_eq!(
        "-xZ".parse::<PauliOperator>(),
        Err(PauliError::IllegalCharacter { ch: 'x', pos: 1 })
    );
}

#[test]
fn y_sign_conventions() {
    let y = p("Y");
    assert_eq!(y.sign(), Some(Sign::Plus));
    assert_eq!(y.phase(), Phase::PlusI);
    assert_eq!(p("-Y").sign(), Some(Sign::Minus));
    assert_eq!(p("+iY").sign(), None);
    assert!(!p("iX").is_hermitian());
    assert_eq!(p("+iXY").to_string(), "+iXY");
    assert_eq!(p("-iZ").to_string(), "-iZ");
}

#[test]
fn set_letter_keeps_sign() {
    let mut q = p("-XZ");
    q.set_letter(0, Letter::Y);
    assert_eq!(q.to_string(), "-YZ");
    q.set_letter(1, Letter::Y);
    assert_eq!(q.to_string(), "-YY");
    q.set_letter(0, Letter::I);
    assert_eq!(q.to_string(), "-IY");
}

#[test]
fn restrict_and_embed() {
    let q = p("-XYZ");
    assert_eq!(q.restrict(&[1, 2]).to_string(), "-YZ");
    assert_eq!(q.restrict(&[2, 0]).to_string(), "-ZX");
    assert_eq!(p("-YZ").embed(4, &[3, 1]).to_string(), "-IZIY");
    assert_eq!(p("X").tensor(&p("-Y")).to_string(), "-XY");
}

#[test]
fn symplectic_round_trip() {
    let q = p("XYZI");
    let s = q.symplectic();
    assert_eq!(s.to_string(), "11000110");
    let back = PauliOperator::from_symplectic(&s).unwrap();
    assert!(back.same_letters(&q));
}

#[test]
fn weight_lex_order() {
    let mut v = [p("ZZ"), p("XI"), p("IZ"), p("IX"), p("XX")];
    v.sort_by(|a, b| a.cmp_weight_lex(b));
    let s: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    assert_eq!(s, vec!["IZ", "IX", "XI", "ZZ", "XX"]);
}

#[test]
fn serde_as_string() {
    let q = p("-XYZ");
    let j = serde_json::to_string(&q).unwrap();
    assert_eq!(j, "\"-XYZ\"");
    let back: PauliOperator = serde_json::from_str(&j).unwrap();
    assert_eq!(back, q);
}

fn arb_pauli(n: usize) -> impl Strategy<Value = PauliOperator> {
    (prop::collection::vec(0u8..4, n), 0u8..4).prop_map(|(ls, e)| {
        let letters: Vec<Letter> = ls
            .iter()
            .map(|&v| [Letter::I, Letter::X, Letter::Y, Letter::Z][v as usize])
            .collect();
        let mut q = PauliOperator::from_letters(Sign::Plus, &letters);
        q.add_phase(e);
        q
    })
}

proptest! {
    #[test]
    fn product_matches_dense((a, b) in (1usize..4).prop_flat_map(|n| (arb_pauli(n), arb_pauli(n)))) {
        let ab = a.multiply(&b).unwrap();
        prop_assert!(close(&dense(&ab), &matmul(&dense(&a), &dense(&b))));
        let ba = b.multiply(&a).unwrap();
        let commute = close(&matmul(&dense(&a), &dense(&b)), &matmul(&dense(&b), &dense(&a)));
        prop_assert_eq!(a.commutes(&b).unwrap(), commute);
        prop_assert_eq!(ab == ba, commute);
    }

    #[test]
    fn display_parse_round_trip(a in (1usize..9).prop_flat_map(arb_pauli)) {
        let text = a.to_string();
        prop_assert_eq!(text.parse::<PauliOperator>().unwrap(), a);
    }

    #[test]
    fn adjoint_is_conjugate_transpose(a in (1usize..4).prop_flat_map(arb_pauli)) {
        let m = dense(&a);
        let adj = dense(&a.adjoint());
        let n = m.len();
        for i in 0..n {
            for j in 0..n {
                prop_assert!((adj[i][j] - m[j][i].conj()).norm() < 1e-12);
            }
        }
        prop_assert_eq!(a.adjoint() == a, a.is_hermitian());
    }

    #[test]
    fn square_is_plus_identity_for_hermitian(a in (1usize..6).prop_flat_map(arb_pauli)) {
        let sq = a.multiply(&a).unwrap();
        prop_assert!(sq.is_identity());
        let expected = if a.is_hermitian() { Phase::PlusOne } else { Phase::MinusOne };
        prop_assert_eq!(sq.phase(), expected);
    }
}
