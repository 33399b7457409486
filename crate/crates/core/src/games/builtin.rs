use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::str::FromStr;
use std::sync::Arc;

use crate::quantum::{controlled_via_swap, Circuit, GateOp, Statevector};

use super::game::{NonLocalGame, QueryEntry, Weight};
use super::strategy::{PlayerStrategy, QuantumStrategy};
use super::GameError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BuiltinGame {
    Chsh,
    Ghz3,
    MagicSquare,
}

impl BuiltinGame {
    pub const ALL: [BuiltinGame; 3] = [BuiltinGame::Chsh, BuiltinGame::Ghz3, BuiltinGame::MagicSquare];

    pub fn name(&self) -> &'static str {
        match self {
            BuiltinGame::Chsh => "chsh",
            BuiltinGame::Ghz3 => "ghz3",
            BuiltinGame::MagicSquare => "magic_square",
        }
    }
}

impl FromStr for BuiltinGame {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "chsh" => Ok(BuiltinGame::Chsh),
            "ghz3" | "ghz" => Ok(BuiltinGame::Ghz3),
            "magic_square" | "magic-square" | "magicsquare" => Ok(BuiltinGame::MagicSquare),
            other => Err(GameError::UnknownGame(other.to_string())),
        }
    }
}

/// The game together with its standard optimal quantum strategy.
pub fn builtin_game(which: BuiltinGame) -> (NonLocalGame, QuantumStrategy) {
    match which {
        BuiltinGame::Chsh => (chsh_game(), chsh_strategy()),
        BuiltinGame::Ghz3 => (ghz3_game(), ghz3_strategy()),
        BuiltinGame::MagicSquare => (magic_square_game(), magic_square_strategy()),
    }
}

fn uniform(rows: Vec<Vec<u64>>) -> Vec<QueryEntry> {
    let n = rows.len() as i64;
    rows.into_iter()
        .map(|queries| QueryEntry {
            queries,
            weight: Weight::new(1, n),
        })
        .collect()
}

/// Uniform bit queries; accept iff `a1 xor a2 = q1 q2`.
pub fn chsh_game() -> NonLocalGame {
    let rows = (0..4u64).map(|i| vec![i >> 1, i & 1]).collect();
    NonLocalGame::new(
        "chsh",
        vec![1, 1],
        vec![1, 1],
        uniform(rows),
        Arc::new(|q, a| (a[0] ^ a[1]) == (q[0] & q[1])),
    )
    .expect("valid builtin")
}

/// Mermin's three-player game: queries uniform over even-parity triples;
/// accept iff `a1 xor a2 xor a3 = q1 or q2 or q3`.
pub fn ghz3_game() -> NonLocalGame {
    let rows = vec![vec![0, 0, 0], vec![0, 1, 1], vec![1, 0, 1], vec![1, 1, 0]];
    NonLocalGame::new(
        "ghz3",
        vec![1, 1, 1],
        vec![1, 1, 1],
        uniform(rows),
        Arc::new(|q, a| (a[0] ^ a[1] ^ a[2]) == (q[0] | q[1] | q[2])),
    )
    .expect("valid builtin")
}

/// Mermin-Peres magic square: player 1 gets a row, player 2 a column (both
/// uniform in {0,1,2}); answers are 3-bit fillings, rows of even parity and
/// columns of odd parity, agreeing on the shared cell.
pub fn magic_square_game() -> NonLocalGame {
    let rows = (0..9u64).map(|i| vec![i / 3, i % 3]).collect();
    NonLocalGame::new(
        "magic_square",
        vec![2, 2],
        vec![3, 3],
        uniform(rows),
        Arc::new(|q, a| {
            let (r, c) = (q[0], q[1]);
            a[0].count_ones() % 2 == 0 && a[1].count_ones() % 2 == 1 && (a[0] >> c & 1) == (a[1] >> r & 1)
        }),
    )
    .expect("valid builtin")
}

fn plain(data: usize, ancillas: usize, gates: Vec<GateOp>, measured: Vec<usize>) -> Circuit {
    Circuit {
        inputs: 0,
        data,
        ancillas,
        gates,
        measured,
    }
}

fn epr_state() -> Statevector {
    let mut s = Statevector::new(2).expect("2 qubits");
    s.apply(&GateOp::H(0)).expect("in range");
    s.apply(&GateOp::Cnot { control: 0, target: 1 }).expect("in range");
    s.name_register("A", 0, 1).expect("fresh");
    s.name_register("B", 1, 1).expect("fresh");
    s
}

/// Player A measures in the pi/4 basis on query 0 and the standard basis on
/// query 1; player B uses the pi/8 and 3pi/8 bases.
pub fn chsh_strategy() -> QuantumStrategy {
    let a_per_query: BTreeMap<u64, Circuit> = [
        (0, plain(1, 0, vec![GateOp::basis_rotation(0, PI / 4.0)], vec![0])),
        (1, plain(1, 0, vec![], vec![0])),
    ]
    .into();
    // Hadamard-basis measurement iff q1 = 0: controlled-H on NOT(q1), built
    // from two Fredkin gates around a scratch qubit.
    let mut gates = vec![GateOp::X(0)];
    gates.extend(controlled_via_swap(0, 1, 2, &[GateOp::H(2)]));
    gates.push(GateOp::X(0));
    let a_encrypted = Circuit {
        inputs: 1,
        data: 1,
        ancillas: 1,
        gates,
        measured: vec![1],
    };
    let b_per_query: BTreeMap<u64, Circuit> = [
        (0, plain(1, 0, vec![GateOp::basis_rotation(0, PI / 8.0)], vec![0])),
        (1, plain(1, 0, vec![GateOp::basis_rotation(0, 3.0 * PI / 8.0)], vec![0])),
    ]
    .into();
    QuantumStrategy {
        shared_state: epr_state(),
        players: vec![
            PlayerStrategy {
                register: "A".into(),
                per_query: a_per_query,
                encrypted_form: Some(a_encrypted),
            },
            PlayerStrategy {
                register: "B".into(),
                per_query: b_per_query,
                encrypted_form: None,
            },
        ],
    }
}

/// GHZ state; query 0 measures X, query 1 measures Y.
pub fn ghz3_strategy() -> QuantumStrategy {
    let mut s = Statevector::new(3).expect("3 qubits");
    s.apply(&GateOp::H(0)).expect("in range");
    s.apply(&GateOp::Cnot { control: 0, target: 1 }).expect("in range");
    s.apply(&GateOp::Cnot { control: 0, target: 2 }).expect("in range");
    for i in 0..3 {
        s.name_register(&format!("A{}", i + 1), i, 1).expect("fresh");
    }
    let s_dagger = [GateOp::S(0), GateOp::S(0), GateOp::S(0)];
    let per_query: BTreeMap<u64, Circuit> = [
        (0, plain(1, 0, vec![GateOp::H(0)], vec![0])),
        (1, plain(1, 0, [&s_dagger[..], &[GateOp::H(0)]].concat(), vec![0])),
    ]
    .into();
    // S-dagger on the data qubit iff the query bit is set, then H.
    let mut gates = controlled_via_swap(0, 1, 2, &[GateOp::S(2), GateOp::S(2), GateOp::S(2)]);
    gates.push(GateOp::H(1));
    let encrypted = Circuit {
        inputs: 1,
        data: 1,
        ancillas: 1,
        gates,
        measured: vec![1],
    };
    let players = (1..=3)
        .map(|i| PlayerStrategy {
            register: format!("A{i}"),
            per_query: per_query.clone(),
            encrypted_form: Some(encrypted.clone()),
        })
        .collect();
    QuantumStrategy {
        shared_state: s,
        players,
    }
}

/// Two EPR pairs; each player measures the three commuting two-qubit Pauli
/// observables of its row (column) of the square
///
/// ```text
///   I⊗Z    Z⊗I    Z⊗Z
///   X⊗I    I⊗X    X⊗X
///  -X⊗Z   -Z⊗X    Y⊗Y
/// ```
///
/// by diagonalizing them with a Clifford, measuring both data qubits, and
/// writing the third (product) outcome into a scratch qubit.
pub fn magic_square_strategy() -> QuantumStrategy {
    let mut s = Statevector::new(4).expect("4 qubits");
    for (a, b) in [(0, 2), (1, 3)] {
        s.apply(&GateOp::H(a)).expect("in range");
        s.apply(&GateOp::Cnot { control: a, target: b }).expect("in range");
    }
    s.name_register("A", 0, 2).expect("fresh");
    s.name_register("B", 2, 2).expect("fresh");

    let parity = [GateOp::Cnot { control: 0, target: 2 }, GateOp::Cnot { control: 1, target: 2 }];
    let cz = [GateOp::H(1), GateOp::Cnot { control: 0, target: 1 }, GateOp::H(1)];
    let with_parity = |pre: &[GateOp], post: &[GateOp]| [pre, &parity[..], post].concat();

    let rows: BTreeMap<u64, Circuit> = [
        (0, plain(2, 1, with_parity(&[], &[]), vec![1, 0, 2])),
        (1, plain(2, 1, with_parity(&[GateOp::H(0), GateOp::H(1)], &[]), vec![0, 1, 2])),
        (
            2,
            plain(
                2,
                1,
                with_parity(
                    &[&cz[..], &[GateOp::H(0), GateOp::H(1), GateOp::X(0), GateOp::X(1)]].concat(),
                    &[],
                ),
                vec![0, 1, 2],
            ),
        ),
    ]
    .into();
    let flip = [GateOp::X(2)];
    let cols: BTreeMap<u64, Circuit> = [
        (0, plain(2, 1, with_parity(&[GateOp::H(0)], &flip), vec![1, 0, 2])),
        (1, plain(2, 1, with_parity(&[GateOp::H(1)], &flip), vec![0, 1, 2])),
        (
            2,
            plain(
                2,
                1,
                with_parity(&[GateOp::Cnot { control: 0, target: 1 }, GateOp::H(0)], &flip),
                vec![1, 0, 2],
            ),
        ),
    ]
    .into();
    QuantumStrategy {
        shared_state: s,
        players: vec![
            PlayerStrategy {
                register: "A".into(),
                per_query: rows,
                encrypted_form: None,
            },
            PlayerStrategy {
                register: "B".into(),
                per_query: cols,
                encrypted_form: None,
            },
        ],
    }
}
