//! placeholder
pub fn fibonacci(m: usize) -> i64 {
    let (mut a, mut b) = (0i64, 1i64);
    for _ in 0..m {
        (a, b) = (b, a + b);
    }
    a
}
