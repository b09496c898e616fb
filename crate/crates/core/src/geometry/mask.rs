use std::path::Path;

use crate::error::{Error, Result};

/// Binary inside/outside image; row 0 is the top of the picture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaskBitmap {
    pub width: usize,
    pub height: usize,
    pub inside: Vec<bool>,
}

impl MaskBitmap {
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut inside = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                inside.push(f(col, row));
            }
        }
        Self { width, height, inside }
    }

    pub fn is_inside(&self, col: usize, row: usize) -> bool {
        self.inside[row * self.width + col]
    }

    pub fn load_pgm(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::parse_pgm(&bytes)
    }

    /// Accepts P2 (ASCII) and P5 (binary, 8 or 16 bit). Pixel > 0 is inside.
    pub fn parse_pgm(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0usize;
        let magic = next_token(bytes, &mut pos).ok_or_else(|| bad("missing magic"))?;
        let binary = match magic.as_str() {
            "P2" => false,
            "P5" => true,
            m => return Err(bad(&format!("unsupported magic {m}"))),
        };
        let mut header = [0usize; 3];
        for slot in header.iter_mut() {
            let tok = next_token(bytes, &mut pos).ok_or_else(|| bad("truncated header"))?;
            *slot = tok.parse().map_err(|_| bad("non-numeric header"))?;
        }
        let [width, height, maxval] = header;
        if maxval == 0 || maxval > 65535 {
            return Err(bad("maxval out of range"));
        }
        let n = width * height;
        let mut inside = Vec::with_capacity(n);
        if binary {
            pos += 1; // single whitespace after maxval
            let wide = maxval > 255;
            let need = if wide { 2 * n } else { n };
            let data = bytes.get(pos..pos + need).ok_or_else(|| bad("truncated raster"))?;
            if wide {
                inside.extend(data.chunks(2).map(|c| c[0] != 0 || c[1] != 0));
            } else {
                inside.extend(data.iter().map(|&b| b != 0));
            }
        } else {
            for _ in 0..n {
                let tok = next_token(bytes, &mut pos).ok_or_else(|| bad("truncated raster"))?;
                let v: u32 = tok.parse().map_err(|_| bad("non-numeric pixel"))?;
                inside.push(v > 0);
            }
        }
        Ok(Self { width, height, inside })
    }
}

fn bad(msg: &str) -> Error {
    Error::Parse(format!("PGM: {msg}"))
}

fn next_token(bytes: &[u8], pos: &mut usize) -> Option<String> {
    loop {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        if *pos < bytes.len() && bytes[*pos] == b'#' {
            while *pos < bytes.len() && bytes[*pos] != b'\n' {
                *pos += 1;
            }
            continue;
        }
        break;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    (start < *pos).then(|| String::from_utf8_lossy(&bytes[start..*pos]).into_owned())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ascii_and_binary_agree() {
        let p2 = b"P2\n# comment\n3 2\n255\n0 10 0\n255 0 1\n";
        let mut p5 = b"P5 3 2 255\n".to_vec();
        p5.extend_from_slice(&[0, 10, 0, 255, 0, 1]);
        let a = MaskBitmap::parse_pgm(p2).unwrap();
        let b = MaskBitmap::parse_pgm(&p5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.inside, vec![false, true, false, true, false, true]);
    }

    #[test]
    fn truncated_is_an_error() {
        assert!(MaskBitmap::parse_pgm(b"P2 2 2 255 1 1").is_err());
    }
}
