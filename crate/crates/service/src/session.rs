//! Per-camera session state and frame handling.

use herbar_core::matcher::{recognize_image, Detection};
use herbar_core::pose::{decompose_homography, normalized_target_homography, CameraIntrinsics};

use crate::protocol::{decode_frame, parse_frame, DetectionBody, ErrorCode, FrameMessage, ServerMessage, WirePose};
use crate::Engine;

/// Display stabilizer: the shown target switches only after `k`
/// consecutive observations agree on a different value (an id or none).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Hysteresis {
    k: usize,
    displayed: Option<u32>,
    candidate: Option<(Option<u32>, usize)>,
}

impl Hysteresis {
    pub fn new(k: usize) -> Self {
        Hysteresis {
            k: k.max(1),
            displayed: None,
            candidate: None,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn displayed(&self) -> Option<u32> {
        self.displayed
    }

    /// Candidate value and its current run length.
    pub fn candidate(&self) -> Option<(Option<u32>, usize)> {
        self.candidate
    }

    pub fn observe(&mut self, seen: Option<u32>) -> Option<u32> {
        if seen == self.displayed {
            self.candidate = None;
            return self.displayed;
        }
        let count = match self.candidate {
            Some((c, n)) if c == seen => n + 1,
            _ => 1,
        };
        if count >= self.k {
            self.displayed = seen;
            self.candidate = None;
        } else {
            self.candidate = Some((seen, count));
        }
        self.displayed
    }
}

/// Last detection of the displayed target, with the frame size it was
/// made in.
#[derive(Debug, Clone, PartialEq)]
struct Shown {
    detection: Detection,
    frame_width: u32,
    frame_height: u32,
}

#[derive(Debug, Clone)]
pub struct Session {
    hysteresis: Hysteresis,
    shown: Option<Shown>,
}

impl Session {
    pub fn new(k: usize) -> Self {
        Session {
            hysteresis: Hysteresis::new(k),
            shown: None,
        }
    }

    pub fn displayed_target(&self) -> Option<u32> {
        self.hysteresis.displayed()
    }

    pub fn hysteresis(&self) -> &Hysteresis {
        &self.hysteresis
    }

    /// Parses and handles one text message from the stream.
    pub fn handle_text(&mut self, engine: &Engine, text: &str) -> ServerMessage {
        match parse_frame(text) {
            Ok(frame) => self.handle_frame(engine, &frame),
            Err((seq, e)) => ServerMessage::Error {
                seq,
                error: ErrorCode::MalformedFrame,
                message: e.to_string(),
            },
        }
    }

    /// Decodes, recognizes, stabilizes and reports. A malformed frame
    /// leaves the session untouched.
    pub fn handle_frame(&mut self, engine: &Engine, msg: &FrameMessage) -> ServerMessage {
        let img = match decode_frame(msg) {
            Ok(img) => img,
            Err(e) => {
                return ServerMessage::Error {
                    seq: Some(msg.seq),
                    error: ErrorCode::MalformedFrame,
                    message: e.to_string(),
                }
            }
        };
        let detection = recognize_image(&img, &engine.db, &engine.extract, &engine.recognize);
        let displayed = self.hysteresis.observe(detection.as_ref().map(|d| d.target_id));
        match detection {
            Some(d) if Some(d.target_id) == displayed => {
                self.shown = Some(Shown {
                    detection: d,
                    frame_width: img.width(),
                    frame_height: img.height(),
                });
            }
            _ if displayed.is_none() => self.shown = None,
            _ => {}
        }
        match &self.shown {
            Some(shown) => ServerMessage::Detection(detection_body(engine, msg.seq, shown)),
            None => ServerMessage::NoDetection { seq: msg.seq },
        }
    }
}

fn detection_body(engine: &Engine, seq: u64, shown: &Shown) -> DetectionBody {
    let d = &shown.detection;
    let target = engine.db.get(d.target_id).expect("detections come from the database");
    let k = CameraIntrinsics::default_for(shown.frame_width, shown.frame_height);
    let pose = decompose_homography(&normalized_target_homography(&d.homography, target.image_width), &k)
        .ok()
        .map(|p| WirePose::from(&p));
    DetectionBody {
        seq,
        target_id: d.target_id,
        name: target.name.clone(),
        confidence: d.confidence,
        inliers: d.inliers,
        homography: d.homography.normalized().to_row_major(),
        pose,
        content: engine.catalog.get(&target.content_id).cloned(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const A: Option<u32> = Some(1);
    const B: Option<u32> = Some(2);

    fn walk(k: usize, seq: &[Option<u32>]) -> Vec<Option<u32>> {
        let mut h = Hysteresis::new(k);
        seq.iter().map(|&s| h.observe(s)).collect()
    }

    #[test]
    fn three_agreeing_frames_switch_the_display() {
        assert_eq!(walk(3, &[A, A, A]), vec![None, None, A]);
    }

    #[test]
    fn alternation_never_switches() {
        let seq: Vec<Option<u32>> = (0..20).map(|i| if i % 2 == 0 { A } else { B }).collect();
        assert!(walk(3, &seq).iter().all(|d| d.is_none()));
    }

    #[test]
    fn losing_the_target_takes_k_empty_frames() {
        assert_eq!(walk(3, &[A, A, A, None, None, A, None, None, None]), vec![
            None, None, A, A, A, A, A, A, None
        ]);
    }

    #[test]
    fn k_one_follows_every_observation() {
        let seq = [A, None, B, B, A];
        assert_eq!(walk(1, &seq), seq.to_vec());
    }
}
