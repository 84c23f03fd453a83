//! JSON messages exchanged on the `/session` stream.

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use herbar_core::content::HerbEntry;
use herbar_core::pose::Pose;
use herbar_core::Image;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MAX_FRAME_WIDTH: u32 = 1920;
pub const MAX_FRAME_HEIGHT: u32 = 1080;

/// A pre-grayscaled camera frame. `pixels` is base64 of `width·height`
/// row-major 8-bit luminance bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameMessage {
    #[serde(rename = "type")]
    pub kind: FrameKind,
    pub seq: u64,
    pub width: u32,
    pub height: u32,
    pub pixels: String,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameKind {
    #[default]
    Frame,
}

impl FrameMessage {
    pub fn from_image(seq: u64, img: &Image) -> Self {
        FrameMessage {
            kind: FrameKind::Frame,
            seq,
            width: img.width(),
            height: img.height(),
            pixels: STANDARD.encode(img.pixels()),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FrameError {
    #[error("message is not a frame: {0}")]
    NotAFrame(String),
    #[error("pixels are not valid base64: {0}")]
    BadBase64(String),
    #[error("expected {expected} pixel bytes for the stated size, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("frame {width}x{height} exceeds 1920x1080")]
    TooLarge { width: u32, height: u32 },
    #[error("frame has zero width or height")]
    Empty,
}

/// Validates dimensions and decodes the luminance payload.
pub fn decode_frame(msg: &FrameMessage) -> Result<Image, FrameError> {
    if msg.width > MAX_FRAME_WIDTH || msg.height > MAX_FRAME_HEIGHT {
        return Err(FrameError::TooLarge {
            width: msg.width,
            height: msg.height,
        });
    }
    if msg.width == 0 || msg.height == 0 {
        return Err(FrameError::Empty);
    }
    let bytes = STANDARD
        .decode(msg.pixels.as_bytes())
        .map_err(|e| FrameError::BadBase64(e.to_string()))?;
    let expected = msg.width as usize * msg.height as usize;
    if bytes.len() != expected {
        return Err(FrameError::LengthMismatch {
            expected,
            got: bytes.len(),
        });
    }
    Ok(Image::new(msg.width, msg.height, bytes).expect("length checked above"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WirePose {
    pub r: [f64; 9],
    pub t: [f64; 3],
}

impl From<&Pose> for WirePose {
    fn from(p: &Pose) -> Self {
        WirePose {
            r: p.r_row_major(),
            t: p.t,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionBody {
    pub seq: u64,
    pub target_id: u32,
    pub name: String,
    pub confidence: f64,
    pub inliers: usize,
    /// Target pixels to frame pixels, row-major, `h33 = 1`.
    pub homography: [f64; 9],
    /// `None` only when the homography cannot be decomposed.
    pub pose: Option<WirePose>,
    /// `None` when the catalog has no entry for the target's content id.
    pub content: Option<HerbEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorCode {
    MalformedFrame,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Detection(DetectionBody),
    NoDetection {
        seq: u64,
    },
    Error {
        seq: Option<u64>,
        error: ErrorCode,
        message: String,
    },
}

impl ServerMessage {
    pub fn seq(&self) -> Option<u64> {
        match self {
            ServerMessage::Detection(d) => Some(d.seq),
            ServerMessage::NoDetection { seq } => Some(*seq),
            ServerMessage::Error { seq, .. } => *seq,
        }
    }

    pub fn target_id(&self) -> Option<u32> {
        match self {
            ServerMessage::Detection(d) => Some(d.target_id),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("server messages serialize")
    }
}

/// Parses a text message into a frame; on failure returns the `seq` if one
/// could be read so the error reply can still echo it.
pub fn parse_frame(text: &str) -> Result<FrameMessage, (Option<u64>, FrameError)> {
    serde_json::from_str(text).map_err(|e| {
        let seq = serde_json::from_str::<serde_json::Value>(text)
            .ok()
            .and_then(|v| v.get("seq").and_then(|s| s.as_u64()));
        (seq, FrameError::NotAFrame(e.to_string()))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_round_trips_with_type_tag() {
        let img = Image::from_fn(3, 2, |x, y| (x * 10 + y) as u8);
        let msg = FrameMessage::from_image(7, &img);
        let json = serde_json::to_value(&msg).unwrap();
        assert_eq!(json["type"], "frame");
        assert_eq!(json["seq"], 7);
        let back: FrameMessage = serde_json::from_value(json).unwrap();
        assert_eq!(decode_frame(&back).unwrap(), img);
    }

    #[test]
    fn wrong_type_tag_rejected() {
        let text = r#"{"type":"hello","seq":3,"width":1,"height":1,"pixels":"AA=="}"#;
        let (seq, err) = parse_frame(text).unwrap_err();
        assert_eq!(seq, Some(3));
        assert!(matches!(err, FrameError::NotAFrame(_)));
        assert_eq!(parse_frame("not json").unwrap_err().0, None);
    }

    #[test]
    fn payload_checks() {
        let mut msg = FrameMessage::from_image(1, &Image::filled(4, 4, 9));
        msg.width = 5;
        assert_eq!(
            decode_frame(&msg),
            Err(FrameError::LengthMismatch { expected: 20, got: 16 })
        );
        msg.pixels = "@@@".into();
        assert!(matches!(decode_frame(&msg), Err(FrameError::BadBase64(_))));
        msg.width = 1921;
        assert!(matches!(decode_frame(&msg), Err(FrameError::TooLarge { .. })));
        msg.width = 0;
        assert_eq!(decode_frame(&msg), Err(FrameError::Empty));
    }

    #[test]
    fn server_message_shapes() {
        let v = serde_json::to_value(ServerMessage::NoDetection { seq: 4 }).unwrap();
        assert_eq!(v, serde_json::json!({"type": "no_detection", "seq": 4}));
        let v = serde_json::to_value(ServerMessage::Error {
            seq: Some(2),
            error: ErrorCode::MalformedFrame,
            message: "x".into(),
        })
        .unwrap();
        assert_eq!(v["type"], "error");
        assert_eq!(v["error"], "MalformedFrame");
    }
}
