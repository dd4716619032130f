//! Reference external agent: reads 2-octet frames from stdin and echoes the
//! observation octet back on stdout, one reply per frame, until EOF.

use std::io::{Read, Write};

fn main() {
    let mut stdin = std::io::stdin().lock();
    let mut stdout = std::io::stdout().lock();
    let mut frame = [0u8; 2];
    while stdin.read_exact(&mut frame).is_ok() {
        if stdout.write_all(&frame[..1]).and_then(|_| stdout.flush()).is_err() {
            break;
        }
    }
}
