//! Flat binary parameter checkpoints.
//!
//! Layout, all integers and reals little-endian:
//!
//! ```text
//! magic       4 bytes  "TNET"
//! version     u32      1
//! n_layers    u32
//! dims        u32 x (n_layers + 1)   input width, then each layer's output width
//! per layer   f32 x (n_out * n_in)   weights, row-major [n_out][n_in]
//!             f32 x n_out            bias
//! ```

use std::io::{self, Read, Write};

use super::mlp::{Dense, Mlp};

const MAGIC: &[u8; 4] = b"TNET";
const VERSION: u32 = 1;

pub fn save<W: Write>(net: &Mlp, mut w: W) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(net.layers().len() as u32).to_le_bytes())?;
    for d in net.dims() {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    for layer in net.layers() {
        for v in layer.weights.iter().chain(&layer.bias) {
            w.write_all(&(*v as f32).to_le_bytes())?;
        }
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f32s<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<f64>> {
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64).collect())
}

pub fn load<R: Read>(mut r: R) -> io::Result<Mlp> {
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg.to_string());
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("not a network checkpoint"));
    }
    if read_u32(&mut r)? != VERSION {
        return Err(bad("unsupported checkpoint version"));
    }
    let n_layers = read_u32(&mut r)? as usize;
    if n_layers == 0 || n_layers > 64 {
        return Err(bad("implausible layer count"));
    }
    let dims = (0..=n_layers).map(|_| read_u32(&mut r).map(|d| d as usize)).collect::<io::Result<Vec<_>>>()?;
    let mut layers = Vec::with_capacity(n_layers);
    for w in dims.windows(2) {
        let (n_in, n_out) = (w[0], w[1]);
        let weights = read_f32s(&mut r, n_in * n_out)?;
        let bias = read_f32s(&mut r, n_out)?;
        layers.push(Dense { n_in, n_out, weights, bias });
    }
    Mlp::from_layers(layers).map_err(|e| bad(&e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn roundtrip_preserves_f32_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let net = Mlp::new(4, &[5, 3], 2, &mut rng);
        let mut buf = Vec::new();
        save(&net, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 4 + 4 * 4 + 4 * net.param_count());
        let back = load(buf.as_slice()).unwrap();
        assert_eq!(back.dims(), net.dims());
        for (a, b) in back.layers().iter().zip(net.layers()) {
            for (x, y) in a.weights.iter().zip(&b.weights) {
                assert_eq!(*x, *y as f32 as f64);
            }
        }
    }

    #[test]
    fn rejects_foreign_bytes() {
        assert!(load(&b"NOPE\x01\x00\x00\x00"[..]).is_err());
    }
}
