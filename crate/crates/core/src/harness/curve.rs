use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const CURVE_HEADER: &str = "episode,reward,mean100";
const WINDOW: usize = 100;

/// One episode of a learning curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// 1-based.
    pub episode: usize,
    /// Undiscounted episode return.
    pub reward: f64,
    /// Mean of the most recent `min(episode, 100)` rewards.
    pub mean100: f64,
}

/// Element `i` is the mean of `rewards[max(0, i - 99) ..= i]`.
pub fn moving_mean_100(rewards: &[f64]) -> Vec<f64> {
    (0..rewards.len())
        .map(|i| {
            let window = &rewards[i.saturating_sub(WINDOW - 1)..=i];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect()
}

pub fn curve_from_rewards(rewards: &[f64]) -> Vec<CurvePoint> {
    rewards
        .iter()
        .zip(moving_mean_100(rewards))
        .enumerate()
        .map(|(i, (&reward, mean100))| CurvePoint {
            episode: i + 1,
            reward,
            mean100,
        })
        .collect()
}

/// CSV text; floats use the shortest representation that parses back to
/// the same value.
pub fn curve_csv(points: &[CurvePoint]) -> String {
    let mut out = format!("{CURVE_HEADER}\n");
    for p in points {
        let _ = writeln!(out, "{},{},{}", p.episode, p.reward, p.mean100);
    }
    out
}

pub fn emit_curve(points: &[CurvePoint], path: &Path) -> Result<()> {
    fs::write(path, curve_csv(points)).map_err(|e| Error::io(path, e))
}

pub fn parse_curve(text: &str) -> Result<Vec<CurvePoint>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == CURVE_HEADER => {}
        _ => {
            return Err(Error::Parse {
                line: 1,
                message: format!("expected header `{CURVE_HEADER}`"),
            })
        }
    }
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let err = |message: String| Error::Parse { line: i + 1, message };
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(err(format!("expected 3 fields, found {}", fields.len())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|e| err(format!("`{s}`: {e}")));
            Ok(CurvePoint {
                episode: fields[0].parse().map_err(|e| err(format!("`{}`: {e}", fields[0])))?,
                reward: num(fields[1])?,
                mean100: num(fields[2])?,
            })
        })
        .collect()
}

pub fn read_curve(path: &Path) -> Result<Vec<CurvePoint>> {
    parse_curve(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

/// Gnuplot-style blocks: a `# <label>` comment, then `episode mean100` rows,
/// blocks separated by two blank lines.
pub fn plot_data(series: &[(&str, &[CurvePoint])]) -> String {
    let mut out = String::new();
    for (i, (label, points)) in series.iter().enumerate() {
        if i > 0 {
            out.push_str("\n\n");
        }
        let _ = writeln!(out, "# {label}");
        for p in points.iter() {
            let _ = writeln!(out, "{} {}", p.episode, p.mean100);
        }
    }
    out
}

pub fn emit_plot_data(series: &[(&str, &[CurvePoint])], path: &Path) -> Result<()> {
    fs::write(path, plot_data(series)).map_err(|e| Error::io(path, e))
}

/// Mean and range of `mean100` across runs at one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregatePoint {
    pub episode: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

/// Aggregates curves episode by episode, up to the shortest curve.
pub fn aggregate_curves(curves: &[Vec<CurvePoint>]) -> Vec<AggregatePoint> {
    let len = curves.iter().map(Vec::len).min().unwrap_or(0);
    (0..len)
        .map(|i| {
            let vals: Vec<f64> = curves.iter().map(|c| c[i].mean100).collect();
            AggregatePoint {
                episode: curves[0][i].episode,
                mean: vals.iter().sum::<f64>() / vals.len() as f64,
                min: vals.iter().copied().fold(f64::INFINITY, f64::min),
                max: vals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect()
}

pub fn aggregate_csv(points: &[AggregatePoint]) -> String {
    let mut out = String::from("episode,mean,min,max\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{}", p.episode, p.mean, p.min, p.max);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn constant_sequence() {
        assert!(moving_mean_100(&[3.5; 250]).iter().all(|&m| m == 3.5));
    }

    #[test]
    fn short_sequence() {
        assert_eq!(moving_mean_100(&[1.0, 2.0, 3.0]), vec![1.0, 1.5, 2.0]);
        assert!(moving_mean_100(&[]).is_empty());
    }

    #[test]
    fn matches_naive_recomputation() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let rewards: Vec<f64> = (0..1000).map(|_| rng.gen_range(-500.0..0.0)).collect();
        let fast = moving_mean_100(&rewards);
        for i in 0..rewards.len() {
            let lo = i.saturating_sub(99);
            let mut s = 0.0;
            let mut n = 0.0;
            for r in &rewards[lo..=i] {
                s += r;
                n += 1.0;
            }
            assert!((fast[i] - s / n).abs() <= 1e-12);
        }
    }

    #[test]
    fn csv_shapes() {
        assert_eq!(curve_csv(&[]), "episode,reward,mean100\n");
        let one = curve_from_rewards(&[-500.0]);
        assert_eq!(curve_csv(&one), "episode,reward,mean100\n1,-500,-500\n");
        assert_eq!(curve_csv(&one).lines().count(), 2);
    }

    #[test]
    fn csv_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rewards: Vec<f64> = (0..300).map(|_| rng.gen_range(-500.0..0.0)).collect();
        let pts = curve_from_rewards(&rewards);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.csv");
        emit_curve(&pts, &path).unwrap();
        assert_eq!(read_curve(&path).unwrap(), pts);
        assert!(parse_curve("bad\n").is_err());
        assert!(matches!(
            parse_curve("episode,reward,mean100\n1,2\n"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(read_curve(&dir.path().join("missing.csv")), Err(Error::Io { .. })));
    }

    #[test]
    fn plot_data_has_one_block_per_series() {
        let a = curve_from_rewards(&[1.0, 2.0]);
        let b = curve_from_rewards(&[3.0]);
        let text = plot_data(&[("psadpg", &a), ("dqn", &b)]);
        assert_eq!(text, "# psadpg\n1 1\n2 1.5\n\n\n# dqn\n1 3\n");
    }

    #[test]
    fn aggregation() {
        let a = curve_from_rewards(&[1.0, 3.0, 5.0]);
        let b = curve_from_rewards(&[3.0, 5.0]);
        let agg = aggregate_curves(&[a, b]);
        assert_eq!(agg.len(), 2);
        assert_eq!(agg[0], AggregatePoint { episode: 1, mean: 2.0, min: 1.0, max: 3.0 });
        assert_eq!(agg[1], AggregatePoint { episode: 2, mean: 3.0, min: 2.0, max: 4.0 });
        assert!(aggregate_csv(&agg).starts_with("episode,mean,min,max\n1,2,1,3\n"));
    }
}
