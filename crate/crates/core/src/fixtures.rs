//! Reference instances shared by tests, benches and the CLI docs.

use crate::tensor::Tensor;

/// Order-4, dimension-4 Nekrasov Z tensor that is not diagonally dominant
/// (row 2 has diagonal 3.8 against an off-diagonal sum of 4).
pub fn example_tensor() -> Tensor {
    let mut entries = vec![
        (vec![0, 0, 0, 0], 8.0),
        (vec![1, 1, 1, 1], 3.8),
        (vec![2, 2, 2, 2], 3.0),
        (vec![3, 3, 3, 3], 10.0),
    ];
    for idx in [[0, 0, 0, 1], [1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0]] {
        entries.push((idx.to_vec(), -1.0));
    }
    for idx in [[2, 1, 1, 1], [1, 2, 1, 1], [1, 1, 2, 1], [1, 1, 1, 2]] {
        entries.push((idx.to_vec(), -1.0));
    }
    for idx in [[3, 3, 3, 0], [3, 3, 0, 3], [3, 0, 3, 3], [0, 3, 3, 3]] {
        entries.push((idx.to_vec(), -3.0));
    }
    Tensor::from_entries(4, 4, entries).expect("fixture is well formed")
}

/// Text-format rendering of [`example_tensor`].
pub const EXAMPLE_TENSOR_TEXT: &str = "\
# order-4 dimension-4 Nekrasov Z tensor
tensor 4 4
1 1 1 1 8
2 2 2 2 3.8
3 3 3 3 3
4 4 4 4 10
1 1 1 2 -1
2 1 1 1 -1
1 2 1 1 -1
1 1 2 1 -1
3 2 2 2 -1
2 3 2 2 -1
2 2 3 2 -1
2 2 2 3 -1
4 4 4 1 -3
4 4 1 4 -3
4 1 4 4 -3
1 4 4 4 -3
";
