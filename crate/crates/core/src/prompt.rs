//! Text prompts for the cloud multimodal model.
//!
//! Three variants are supported: the bare user query, the query preceded by
//! the STR transcript, and the query preceded by the transcript with each
//! paragraph's center coordinates. A pointing gesture appends one more
//! sentence naming what the user points at.

use crate::error::{Error, Result};
use crate::reading_order::{Paragraph, Word};
use crate::roi::PointedTargets;

const TRANSCRIPT_PREAMBLE: &str =
    "Here is a transcription of the recognized text in the image, which may contain misspelled words.";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PromptKind {
    /// The user query verbatim.
    MmllmOnly,
    /// Transcript of all paragraphs, then the query.
    WithStr,
    /// `(text, cx, cy)` tuples in image coordinates, then the query.
    WithStrPositions,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PromptVariant {
    pub kind: PromptKind,
    /// `(width, height)` of the image, required for positions.
    pub image_size: Option<(u32, u32)>,
}

impl PromptVariant {
    pub fn plain() -> Self {
        PromptVariant {
            kind: PromptKind::MmllmOnly,
            image_size: None,
        }
    }

    pub fn with_str() -> Self {
        PromptVariant {
            kind: PromptKind::WithStr,
            image_size: None,
        }
    }

    pub fn with_positions(width: u32, height: u32) -> Self {
        PromptVariant {
            kind: PromptKind::WithStrPositions,
            image_size: Some((width, height)),
        }
    }
}

/// What the pointing sentence mentions.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GestureMention {
    pub words: Vec<String>,
    pub paragraph: Option<String>,
}

impl GestureMention {
    /// Resolves pointed-target indices against the items they index.
    pub fn resolve(targets: &PointedTargets, words: &[Word], paragraphs: &[Paragraph]) -> Self {
        GestureMention {
            words: targets.words.iter().map(|&(i, _)| words[i].text.clone()).collect(),
            paragraph: targets.paragraphs.first().map(|&(i, _)| paragraphs[i].text()),
        }
    }

    fn sentence(&self) -> Option<String> {
        let mut parts = Vec::new();
        if !self.words.is_empty() {
            parts.push(format!("The user is pointing at: {}.", self.words.join(", ")));
        }
        if let Some(p) = &self.paragraph {
            parts.push(format!("Nearest paragraph: {p}."));
        }
        (!parts.is_empty()).then(|| parts.join(" "))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptPayload {
    pub text: String,
    pub paragraphs_used: usize,
}

fn reading_sequence(paragraphs: &[Paragraph]) -> Vec<&Paragraph> {
    let mut seq: Vec<&Paragraph> = paragraphs.iter().collect();
    seq.sort_by(|a, b| {
        a.rect
            .top
            .total_cmp(&b.rect.top)
            .then_with(|| a.rect.left.total_cmp(&b.rect.left))
    });
    seq
}

/// All paragraph texts joined by single spaces, paragraphs in `(top, left)`
/// order.
pub fn paragraph_transcript(paragraphs: &[Paragraph]) -> String {
    let texts: Vec<String> = reading_sequence(paragraphs).iter().map(|p| p.text()).collect();
    texts.join(" ")
}

fn rounded_within(v: f64, limit: u32) -> i64 {
    (v.round() as i64).clamp(0, limit as i64)
}

/// Assembles the prompt for one variant.
pub fn build_prompt(
    variant: &PromptVariant,
    paragraphs: &[Paragraph],
    user_query: &str,
    gesture: Option<&GestureMention>,
) -> Result<PromptPayload> {
    let (mut text, used) = match variant.kind {
        PromptKind::MmllmOnly => (user_query.to_string(), 0),
        PromptKind::WithStr => (
            format!(
                "{TRANSCRIPT_PREAMBLE} [{}]. My question is {user_query}",
                paragraph_transcript(paragraphs)
            ),
            paragraphs.len(),
        ),
        PromptKind::WithStrPositions => {
            let (w, h) = variant
                .image_size
                .ok_or_else(|| Error::invalid("the positions prompt needs the image size"))?;
            let tuples: Vec<String> = reading_sequence(paragraphs)
                .iter()
                .map(|p| {
                    format!(
                        "({}, {}, {})",
                        p.text(),
                        rounded_within(p.rbox.cx, w),
                        rounded_within(p.rbox.cy, h)
                    )
                })
                .collect();
            (
                format!(
                    "I have included the coordinates of the text within the image. \
                     The coordinates (0,0) is indicative of the top-left corner of the image \
                     and ({w}, {h}) is indicative of the bottom right corner of the image. \
                     For example, the tuple (zzzz, 10, 20) means the paragraph zzzz is centered \
                     at the point (10, 20) within the image. Here is a transcription of the \
                     recognized text in the image according to this coordinate system. \
                     It may contain misspelled words. [{}]. My question is {user_query}",
                    tuples.join(" ")
                ),
                paragraphs.len(),
            )
        }
    };
    if let Some(sentence) = gesture.and_then(GestureMention::sentence) {
        if !text.is_empty() {
            text.push(' ');
        }
        text.push_str(&sentence);
    }
    if text.is_empty() {
        return Err(Error::invalid("prompt would be empty"));
    }
    Ok(PromptPayload {
        text,
        paragraphs_used: used,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::RotatedBox;

    fn para(words: &[&str], top: f64) -> Paragraph {
        let ws = words
            .iter()
            .enumerate()
            .map(|(i, t)| Word::new(t, RotatedBox::from_ltwh(10.0 + 60.0 * i as f64, top, 50.0, 20.0)))
            .collect();
        Paragraph::from_words(ws).unwrap()
    }

    #[test]
    fn transcript() {
        assert_eq!(paragraph_transcript(&[]), "");
        assert_eq!(paragraph_transcript(&[para(&["hello", "world"], 0.0)]), "hello world");
        let out = paragraph_transcript(&[para(&["second"], 100.0), para(&["first"], 0.0)]);
        assert_eq!(out, "first second");
    }

    #[test]
    fn plain_is_verbatim() {
        let p = build_prompt(&PromptVariant::plain(), &[para(&["x"], 0.0)], "what does this sign say", None).unwrap();
        assert_eq!(p.text, "what does this sign say");
        assert_eq!(p.paragraphs_used, 0);
    }

    #[test]
    fn empty_transcript_brackets() {
        let p = build_prompt(&PromptVariant::with_str(), &[], "q", None).unwrap();
        assert!(p.text.contains("[]. My question is q"));
    }

    #[test]
    fn positions_need_image_size() {
        let v = PromptVariant {
            kind: PromptKind::WithStrPositions,
            image_size: None,
        };
        assert!(build_prompt(&v, &[], "q", None).is_err());
    }

    #[test]
    fn positions_are_clamped_to_the_image() {
        let p = para(&["edge"], -40.0);
        let out = build_prompt(&PromptVariant::with_positions(100, 100), &[p], "q", None).unwrap();
        assert!(out.text.contains("(edge, 35, 0)"), "{}", out.text);
    }

    #[test]
    fn gesture_sentence() {
        let g = GestureMention {
            words: vec!["OPEN".into(), "24h".into()],
            paragraph: Some("OPEN 24h".into()),
        };
        let p = build_prompt(&PromptVariant::plain(), &[], "what is this", Some(&g)).unwrap();
        assert_eq!(
            p.text,
            "what is this The user is pointing at: OPEN, 24h. Nearest paragraph: OPEN 24h."
        );
        let none = build_prompt(&PromptVariant::plain(), &[], "q", Some(&GestureMention::default())).unwrap();
        assert_eq!(none.text, "q");
    }
}
