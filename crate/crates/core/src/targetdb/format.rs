//! `.hrb` binary layout, little-endian throughout:
//!
//! ```text
//! "HRB1" | version u32 | target_count u32 | reserved u32
//! per target:
//!   id u32 | name_len u16 | name bytes | image_width u32 | image_height u32
//!   kp_count u32 | kp_count × (x f32, y f32, level u8, θ f32, score f32)
//!   kp_count × 32-byte descriptor | content_id_len u16 | content_id bytes
//! CRC32 (IEEE) of every preceding byte
//! ```

use std::io::{Read, Write};

use crate::features::{Descriptor, FeatureSet, Keypoint, DESCRIPTOR_BYTES};

use super::{DbError, Target, TargetDatabase};

pub const MAGIC: [u8; 4] = *b"HRB1";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 16;
const CRC_LEN: usize = 4;

fn put_u16(out: &mut Vec<u8>, v: u16) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_f32(out: &mut Vec<u8>, v: f32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) -> Result<(), DbError> {
    let len = u16::try_from(s.len())
        .map_err(|_| DbError::InvalidData(format!("string of {} bytes exceeds u16 length", s.len())))?;
    put_u16(out, len);
    out.extend_from_slice(s.as_bytes());
    Ok(())
}

impl TargetDatabase {
    pub fn to_bytes(&self) -> Result<Vec<u8>, DbError> {
        let mut out = Vec::new();
        out.extend_from_slice(&MAGIC);
        put_u32(&mut out, self.format_version);
        put_u32(&mut out, self.targets.len() as u32);
        put_u32(&mut out, 0);
        for t in &self.targets {
            put_u32(&mut out, t.id);
            put_str(&mut out, &t.name)?;
            put_u32(&mut out, t.image_width);
            put_u32(&mut out, t.image_height);
            put_u32(&mut out, t.features.len() as u32);
            for k in &t.features.keypoints {
                put_f32(&mut out, k.x);
                put_f32(&mut out, k.y);
                out.push(k.level);
                put_f32(&mut out, k.orientation);
                put_f32(&mut out, k.score);
            }
            for d in &t.features.descriptors {
                out.extend_from_slice(&d.0);
            }
            put_str(&mut out, &t.content_id)?;
        }
        let crc = crc32fast::hash(&out);
        put_u32(&mut out, crc);
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, DbError> {
        if bytes.len() < 4 {
            return Err(DbError::TruncatedFile);
        }
        if bytes[..4] != MAGIC {
            return Err(DbError::BadMagic);
        }
        if bytes.len() < 8 {
            return Err(DbError::TruncatedFile);
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(DbError::UnsupportedVersion(version));
        }
        if bytes.len() < HEADER_LEN + CRC_LEN {
            return Err(DbError::TruncatedFile);
        }
        let (body, tail) = bytes.split_at(bytes.len() - CRC_LEN);
        let stored = u32::from_le_bytes(tail.try_into().unwrap());
        let computed = crc32fast::hash(body);
        if stored != computed {
            // A structure that runs past the end of the file means bytes are
            // missing; anything else is corruption.
            return Err(match parse(bytes) {
                Err(DbError::TruncatedFile) => DbError::TruncatedFile,
                Ok((_, used)) if used + CRC_LEN > bytes.len() => DbError::TruncatedFile,
                _ => DbError::ChecksumMismatch { stored, computed },
            });
        }
        let (db, used) = parse(body)?;
        if used != body.len() {
            return Err(DbError::InvalidData(format!(
                "{} trailing bytes before checksum",
                body.len() - used
            )));
        }
        Ok(db)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], DbError> {
        let end = self.pos.checked_add(n).ok_or(DbError::TruncatedFile)?;
        if end > self.bytes.len() {
            return Err(DbError::TruncatedFile);
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, DbError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, DbError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, DbError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, DbError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String, DbError> {
        let len = self.u16()? as usize;
        let raw = self.take(len)?;
        String::from_utf8(raw.to_vec()).map_err(|e| DbError::InvalidData(format!("non UTF-8 string: {e}")))
    }
}

/// Walks the structure without the checksum; returns bytes consumed.
fn parse(bytes: &[u8]) -> Result<(TargetDatabase, usize), DbError> {
    let mut c = Cursor { bytes, pos: 4 };
    let format_version = c.u32()?;
    let count = c.u32()?;
    let _reserved = c.u32()?;
    let mut db = TargetDatabase {
        format_version,
        targets: Vec::new(),
    };
    for _ in 0..count {
        let id = c.u32()?;
        let name = c.string()?;
        let image_width = c.u32()?;
        let image_height = c.u32()?;
        let kp_count = c.u32()? as usize;
        // Each keypoint costs 17 + 32 bytes; reject impossible counts before allocating.
        if kp_count.saturating_mul(17 + DESCRIPTOR_BYTES) > bytes.len() - c.pos {
            return Err(DbError::TruncatedFile);
        }
        let mut keypoints = Vec::with_capacity(kp_count);
        for _ in 0..kp_count {
            let x = c.f32()?;
            let y = c.f32()?;
            let level = c.u8()?;
            let orientation = c.f32()?;
            let score = c.f32()?;
            keypoints.push(Keypoint {
                x,
                y,
                level,
                orientation,
                score,
            });
        }
        let mut descriptors = Vec::with_capacity(kp_count);
        for _ in 0..kp_count {
            descriptors.push(Descriptor(c.take(DESCRIPTOR_BYTES)?.try_into().unwrap()));
        }
        let content_id = c.string()?;
        let target = Target {
            id,
            name,
            image_width,
            image_height,
            features: FeatureSet {
                width: image_width,
                height: image_height,
                keypoints,
                descriptors,
            },
            content_id,
        };
        db.push(target)?;
    }
    Ok((db, c.pos))
}

pub fn save_db(db: &TargetDatabase, sink: &mut impl Write) -> Result<(), DbError> {
    sink.write_all(&db.to_bytes()?)?;
    Ok(())
}

pub fn load_db(source: &mut impl Read) -> Result<TargetDatabase, DbError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    TargetDatabase::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_db() -> TargetDatabase {
        let kps = vec![
            Keypoint {
                x: 12.5,
                y: 40.25,
                level: 2,
                orientation: -1.25,
                score: 880.0,
            },
            Keypoint {
                x: 100.0,
                y: 3.0,
                level: 0,
                orientation: 3.0,
                score: 21.0,
            },
        ];
        let mut d0 = [0u8; 32];
        d0[5] = 0xA5;
        let target = Target {
            id: 7,
            name: "灵芝 lingzhi".into(),
            image_width: 320,
            image_height: 240,
            features: FeatureSet {
                width: 320,
                height: 240,
                keypoints: kps,
                descriptors: vec![Descriptor(d0), Descriptor([0xFF; 32])],
            },
            content_id: "lingzhi".into(),
        };
        TargetDatabase::from_targets(vec![target]).unwrap()
    }

    #[test]
    fn empty_db_is_header_plus_crc() {
        let bytes = TargetDatabase::new().to_bytes().unwrap();
        assert_eq!(bytes.len(), HEADER_LEN + 4);
        assert_eq!(&bytes[..4], b"HRB1");
        assert_eq!(TargetDatabase::from_bytes(&bytes).unwrap(), TargetDatabase::new());
    }

    #[test]
    fn layout_sizes() {
        let bytes = sample_db().to_bytes().unwrap();
        let name_len = "灵芝 lingzhi".len();
        let expected = HEADER_LEN + 4 + 2 + name_len + 4 + 4 + 4 + 2 * 17 + 2 * 32 + 2 + 7 + 4;
        assert_eq!(bytes.len(), expected);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 7);
    }

    #[test]
    fn round_trip_is_byte_exact() {
        let db = sample_db();
        let bytes = db.to_bytes().unwrap();
        let back = TargetDatabase::from_bytes(&bytes).unwrap();
        assert_eq!(back, db);
        assert_eq!(back.to_bytes().unwrap(), bytes);
    }

    #[test]
    fn corruption_detected() {
        let bytes = sample_db().to_bytes().unwrap();
        // A descriptor byte deep in the payload.
        let mut flipped = bytes.clone();
        let i = bytes.len() - 4 - 2 - 7 - 10;
        flipped[i] ^= 0x01;
        assert!(matches!(
            TargetDatabase::from_bytes(&flipped),
            Err(DbError::ChecksumMismatch { .. })
        ));

        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(matches!(TargetDatabase::from_bytes(&magic), Err(DbError::BadMagic)));

        let mut version = bytes.clone();
        version[4] = 9;
        assert!(matches!(
            TargetDatabase::from_bytes(&version),
            Err(DbError::UnsupportedVersion(9))
        ));

        for cut in [6, 12, 19, 30, bytes.len() - 20, bytes.len() - 1] {
            assert!(
                matches!(TargetDatabase::from_bytes(&bytes[..cut]), Err(DbError::TruncatedFile)),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn every_payload_flip_is_detected() {
        let bytes = sample_db().to_bytes().unwrap();
        for i in HEADER_LEN..bytes.len() {
            let mut b = bytes.clone();
            b[i] ^= 0x40;
            assert!(
                matches!(
                    TargetDatabase::from_bytes(&b),
                    Err(DbError::ChecksumMismatch { .. } | DbError::TruncatedFile)
                ),
                "flip at {i} undetected"
            );
        }
    }
}
