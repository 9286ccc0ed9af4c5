//! Binary parameter files.
//!
//! Layout, all little-endian: the 8-byte magic `UHISRNET`, a `u32` format
//! version, a `u32` network count, then per network: `u32` layer count
//! `L`, `L + 1` `u32` layer sizes, `L` activation codes (`u8`), the leak
//! slope (`f64`), and the flat parameters (`f64`) in [`MlpParams`] order.

use std::fmt::Write as _;
use std::io::{Read, Write};

use super::mlp::{Activation, MlpParams, MlpSpec};
use super::NeuralError;

pub const MAGIC: &[u8; 8] = b"UHISRNET";
pub const FORMAT_VERSION: u32 = 1;

/// Upper bound on any single dimension read from a file.
const MAX_DIM: u32 = 1 << 20;

pub fn write_networks<W: Write>(mut out: W, nets: &[&MlpParams]) -> Result<(), NeuralError> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    out.write_all(&(nets.len() as u32).to_le_bytes())?;
    for net in nets {
        let spec = net.spec();
        out.write_all(&(spec.n_layers() as u32).to_le_bytes())?;
        for &s in &spec.sizes {
            out.write_all(&(s as u32).to_le_bytes())?;
        }
        for a in &spec.activations {
            out.write_all(&[a.code()])?;
        }
        out.write_all(&spec.leak.to_le_bytes())?;
        for v in net.flat() {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn networks_to_bytes(nets: &[&MlpParams]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_networks(&mut buf, nets).expect("writing to memory");
    buf
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, NeuralError> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, NeuralError> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_dim<R: Read>(r: &mut R, what: &str) -> Result<usize, NeuralError> {
    let v = read_u32(r)?;
    if v > MAX_DIM {
        return Err(NeuralError::Format(format!(
            "{what} {v} is implausibly large"
        )));
    }
    Ok(v as usize)
}

pub fn read_networks<R: Read>(mut input: R) -> Result<Vec<MlpParams>, NeuralError> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(NeuralError::Format("bad magic".into()));
    }
    let version = read_u32(&mut input)?;
    if version != FORMAT_VERSION {
        return Err(NeuralError::Format(format!(
            "unsupported version {version}"
        )));
    }
    let count = read_dim(&mut input, "network count")?;
    let mut nets = Vec::with_capacity(count);
    for _ in 0..count {
        let n_layers = read_dim(&mut input, "layer count")?;
        let sizes = (0..=n_layers)
            .map(|_| read_dim(&mut input, "layer size"))
            .collect::<Result<Vec<_>, _>>()?;
        let mut codes = vec![0u8; n_layers];
        input.read_exact(&mut codes)?;
        let activations = codes
            .iter()
            .map(|&c| {
                Activation::from_code(c)
                    .ok_or_else(|| NeuralError::Format(format!("bad activation code {c}")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        let leak = read_f64(&mut input)?;
        let spec = MlpSpec {
            sizes,
            activations,
            leak,
        };
        spec.validate()?;
        let data = (0..spec.n_params())
            .map(|_| read_f64(&mut input))
            .collect::<Result<Vec<_>, _>>()?;
        nets.push(MlpParams::from_flat(spec, data)?);
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(NeuralError::Format("trailing bytes".into()));
    }
    Ok(nets)
}

/// One-line description, e.g. `5-50-50-1 leaky_relu,leaky_relu,linear leak=0.01`.
pub fn describe_spec(spec: &MlpSpec) -> String {
    let sizes: Vec<String> = spec.sizes.iter().map(|s| s.to_string()).collect();
    let acts: Vec<&str> = spec.activations.iter().map(|a| a.name()).collect();
    format!("{} {} leak={}", sizes.join("-"), acts.join(","), spec.leak)
}

/// `key = value` manifest: one `network.N` line per network, then `extra`.
pub fn manifest_text(names: &[&str], nets: &[&MlpParams], extra: &[(String, String)]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format = {FORMAT_VERSION}");
    for (i, net) in nets.iter().enumerate() {
        let name = names.get(i).copied().unwrap_or("");
        let _ = writeln!(s, "network.{i} = {name} {}", describe_spec(net.spec()));
    }
    for (k, v) in extra {
        let _ = writeln!(s, "{k} = {v}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = MlpParams::init(
            MlpSpec::new(&[5, 50, 50, 1], Activation::LeakyRelu, Activation::Linear).unwrap(),
            &mut rng,
        );
        let b = MlpParams::init(
            MlpSpec::new(&[2, 3, 1], Activation::LeakyRelu, Activation::Sigmoid).unwrap(),
            &mut rng,
        );
        let bytes = networks_to_bytes(&[&a, &b]);
        assert_eq!(&bytes[..8], MAGIC);
        let back = read_networks(bytes.as_slice()).unwrap();
        assert_eq!(back, vec![a, b]);
    }

    #[test]
    fn corrupt_files_rejected() {
        let a = MlpParams::zeros(
            MlpSpec::new(&[1, 1], Activation::Linear, Activation::Linear).unwrap(),
        );
        let bytes = networks_to_bytes(&[&a]);
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(read_networks(bad.as_slice()).is_err());
        assert!(read_networks(&bytes[..bytes.len() - 1]).is_err());
        let mut long = bytes.clone();
        long.push(0);
        assert!(read_networks(long.as_slice()).is_err());
    }

    #[test]
    fn manifest_lists_networks() {
        let a = MlpParams::zeros(
            MlpSpec::new(&[5, 50, 50, 1], Activation::LeakyRelu, Activation::Linear).unwrap(),
        );
        let m = manifest_text(&["Psi"], &[&a], &[("seed".into(), "7".into())]);
        assert!(m.contains("network.0 = Psi 5-50-50-1 leaky_relu,leaky_relu,linear leak=0.01"));
        assert!(m.ends_with("seed = 7\n"));
    }
}
