//! Demonstration sets: passive observations of a victim, with episode
//! structure, an 80/20 split helper, and the binary demonstration file
//! format.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dqn::{run_episode_transitions, Policy, Transition};
use crate::seeding::mix;

const MAGIC: [u8; 4] = *b"DEMO";
const VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum DemoError {
    #[error("demonstration set is empty")]
    Empty,
    #[error("episode starts must begin at 0 and strictly ascend, got {0:?}")]
    BadBoundaries(Vec<usize>),
    #[error("state chain broken at transition {0}: next_state differs from successor state")]
    ChainBroken(usize),
    #[error("terminal transition {0} is not the last of its episode")]
    TerminalNotLast(usize),
}

#[derive(Debug, Error)]
pub enum DemoFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("unsupported demonstration file version {0}")]
    UnsupportedVersion(u8),
    #[error("file truncated")]
    Truncated,
    #[error("inconsistent demonstration data: {0}")]
    Invalid(#[from] DemoError),
}

/// Ordered transitions with episode boundary markers. Within an episode
/// every transition's `next_state` equals the successor's `state`.
#[derive(Debug, Clone, PartialEq)]
pub struct DemonstrationSet {
    transitions: Vec<Transition>,
    episode_starts: Vec<usize>,
}

impl DemonstrationSet {
    pub fn new(
        transitions: Vec<Transition>,
        episode_starts: Vec<usize>,
    ) -> Result<Self, DemoError> {
        if transitions.is_empty() {
            return Err(DemoError::Empty);
        }
        let ascending = episode_starts.first() == Some(&0)
            && episode_starts.windows(2).all(|w| w[0] < w[1])
            && episode_starts.iter().all(|&s| s < transitions.len());
        if !ascending {
            return Err(DemoError::BadBoundaries(episode_starts));
        }
        let set = Self { transitions, episode_starts };
        for (start, end) in set.episode_bounds() {
            for i in start..end - 1 {
                if set.transitions[i].terminal {
                    return Err(DemoError::TerminalNotLast(i));
                }
                if set.transitions[i].next_state != set.transitions[i + 1].state {
                    return Err(DemoError::ChainBroken(i));
                }
            }
        }
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn episode_starts(&self) -> &[usize] {
        &self.episode_starts
    }

    pub fn episode_count(&self) -> usize {
        self.episode_starts.len()
    }

    /// (start, end) index pairs, one per episode.
    pub fn episode_bounds(&self) -> Vec<(usize, usize)> {
        let mut bounds = Vec::with_capacity(self.episode_starts.len());
        for (i, &start) in self.episode_starts.iter().enumerate() {
            let end = self.episode_starts.get(i + 1).copied().unwrap_or(self.transitions.len());
            bounds.push((start, end));
        }
        bounds
    }

    pub fn episode(&self, idx: usize) -> &[Transition] {
        let (start, end) = self.episode_bounds()[idx];
        &self.transitions[start..end]
    }

    /// Splits whole episodes into (train, holdout); the holdout receives
    /// `holdout_fraction` of the episodes, at least one on each side.
    pub fn split_by_episode(&self, holdout_fraction: f64, seed: u64) -> (Self, Self) {
        assert!((0.0..1.0).contains(&holdout_fraction));
        let episodes = self.episode_count();
        assert!(episodes >= 2, "cannot split fewer than 2 episodes");
        let mut order: Vec<usize> = (0..episodes).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let holdout_count =
            ((episodes as f64 * holdout_fraction).round() as usize).clamp(1, episodes - 1);
        let mut holdout_ids: Vec<usize> = order[..holdout_count].to_vec();
        holdout_ids.sort_unstable();
        let rebuild = |ids: &[usize]| -> DemonstrationSet {
            let mut transitions = Vec::new();
            let mut starts = Vec::new();
            for &id in ids {
                starts.push(transitions.len());
                transitions.extend_from_slice(self.episode(id));
            }
            DemonstrationSet::new(transitions, starts).expect("episode subsets stay consistent")
        };
        let train_ids: Vec<usize> =
            (0..episodes).filter(|id| !holdout_ids.contains(id)).collect();
        (rebuild(&train_ids), rebuild(&holdout_ids))
    }

    /// Writes the binary demonstration file (magic, version, state dim,
    /// packed little-endian 64-bit transitions, episode boundary block).
    pub fn save(&self, path: &Path) -> Result<(), DemoFileError> {
        let mut w = BufWriter::new(File::create(path)?);
        let dim = self.transitions[0].state.len() as u32;
        w.write_all(&MAGIC)?;
        w.write_all(&[VERSION])?;
        w.write_all(&dim.to_le_bytes())?;
        w.write_all(&(self.transitions.len() as u64).to_le_bytes())?;
        for t in &self.transitions {
            for v in &t.state {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&(t.action as u64).to_le_bytes())?;
            w.write_all(&t.reward.to_le_bytes())?;
            for v in &t.next_state {
                w.write_all(&v.to_le_bytes())?;
            }
            w.write_all(&(t.terminal as u64).to_le_bytes())?;
        }
        w.write_all(&(self.episode_starts.len() as u64).to_le_bytes())?;
        for &s in &self.episode_starts {
            w.write_all(&(s as u64).to_le_bytes())?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, DemoFileError> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        read_exact(&mut r, &mut magic)?;
        if magic != MAGIC {
            return Err(DemoFileError::BadMagic);
        }
        let mut version = [0u8; 1];
        read_exact(&mut r, &mut version)?;
        if version[0] != VERSION {
            return Err(DemoFileError::UnsupportedVersion(version[0]));
        }
        let dim = read_u32(&mut r)? as usize;
        let count = read_u64(&mut r)? as usize;
        let mut transitions = Vec::with_capacity(count);
        for _ in 0..count {
            let state = read_f64_vec(&mut r, dim)?;
            let action = read_u64(&mut r)? as usize;
            let reward = read_f64(&mut r)?;
            let next_state = read_f64_vec(&mut r, dim)?;
            let terminal = read_u64(&mut r)? != 0;
            transitions.push(Transition { state, action, reward, next_state, terminal });
        }
        let start_count = read_u64(&mut r)? as usize;
        let mut starts = Vec::with_capacity(start_count);
        for _ in 0..start_count {
            starts.push(read_u64(&mut r)? as usize);
        }
        Ok(Self::new(transitions, starts)?)
    }
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), DemoFileError> {
    r.read_exact(buf).map_err(|e| {
        if e.kind() == std::io::ErrorKind::UnexpectedEof {
            DemoFileError::Truncated
        } else {
            DemoFileError::Io(e)
        }
    })
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, DemoFileError> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, DemoFileError> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64, DemoFileError> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn read_f64_vec<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>, DemoFileError> {
    (0..n).map(|_| read_f64(r)).collect()
}

/// Observes a victim purely (no perturbation) over fresh episodes until `n`
/// transitions are recorded; the final episode is truncated at `n`.
pub fn collect_demonstrations(victim: &Policy, n: usize, seed: u64) -> DemonstrationSet {
    assert!(n >= 1);
    let mut transitions = Vec::with_capacity(n);
    let mut starts = Vec::new();
    let mut episode = 0u64;
    while transitions.len() < n {
        starts.push(transitions.len());
        let recorded =
            run_episode_transitions(victim, mix(seed, 2 * episode), mix(seed, 2 * episode + 1));
        for t in recorded {
            transitions.push(t);
            if transitions.len() == n {
                break;
            }
        }
        episode += 1;
    }
    DemonstrationSet::new(transitions, starts).expect("rollouts chain by construction")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::approximator::{Network, NetworkSpec};

    fn test_policy(seed: u64) -> Policy {
        Policy::Greedy(Network::init(NetworkSpec::new(vec![4, 8, 2], seed)).unwrap())
    }

    #[test]
    fn collect_single_transition() {
        let demos = collect_demonstrations(&test_policy(1), 1, 9);
        assert_eq!(demos.len(), 1);
        assert_eq!(demos.episode_count(), 1);
        let expected = crate::env::reset(mix(9, 0));
        assert_eq!(demos.transitions()[0].state, expected.observation().to_vec());
    }

    #[test]
    fn collected_sets_chain_and_truncate_at_n() {
        let demos = collect_demonstrations(&test_policy(2), 333, 5);
        assert_eq!(demos.len(), 333);
        // new() re-validates the chaining invariant; also check manually.
        for (start, end) in demos.episode_bounds() {
            for i in start..end - 1 {
                assert_eq!(demos.transitions()[i].next_state, demos.transitions()[i + 1].state);
            }
        }
    }

    #[test]
    fn collection_is_deterministic() {
        let a = collect_demonstrations(&test_policy(3), 100, 11);
        let b = collect_demonstrations(&test_policy(3), 100, 11);
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_broken_chain() {
        let demos = collect_demonstrations(&test_policy(4), 50, 1);
        let mut transitions = demos.transitions().to_vec();
        transitions[10].next_state[0] += 1.0;
        let starts = demos.episode_starts().to_vec();
        assert!(matches!(
            DemonstrationSet::new(transitions, starts),
            Err(DemoError::ChainBroken(_)) | Err(DemoError::TerminalNotLast(_))
        ));
    }

    #[test]
    fn rejects_bad_boundaries() {
        let demos = collect_demonstrations(&test_policy(5), 20, 2);
        let transitions = demos.transitions().to_vec();
        assert!(matches!(
            DemonstrationSet::new(transitions.clone(), vec![1]),
            Err(DemoError::BadBoundaries(_))
        ));
        assert!(matches!(
            DemonstrationSet::new(transitions, vec![]),
            Err(DemoError::BadBoundaries(_))
        ));
    }

    #[test]
    fn split_preserves_episodes_and_sizes() {
        let demos = collect_demonstrations(&test_policy(6), 400, 3);
        let episodes = demos.episode_count();
        assert!(episodes >= 2);
        let (train, holdout) = demos.split_by_episode(0.2, 42);
        assert_eq!(train.len() + holdout.len(), demos.len());
        assert_eq!(train.episode_count() + holdout.episode_count(), episodes);
        assert!(holdout.episode_count() >= 1);
        assert!(train.episode_count() >= 1);
    }

    #[test]
    fn file_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demos.bin");
        let demos = collect_demonstrations(&test_policy(7), 120, 13);
        demos.save(&path).unwrap();
        let loaded = DemonstrationSet::load(&path).unwrap();
        assert_eq!(demos, loaded);
    }

    #[test]
    fn load_rejects_bad_magic_version_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("demos.bin");
        let demos = collect_demonstrations(&test_policy(8), 30, 17);
        demos.save(&path).unwrap();
        let bytes = std::fs::read(&path).unwrap();

        let mut bad_magic = bytes.clone();
        bad_magic[0] = b'X';
        std::fs::write(&path, &bad_magic).unwrap();
        assert!(matches!(DemonstrationSet::load(&path), Err(DemoFileError::BadMagic)));

        let mut bad_version = bytes.clone();
        bad_version[4] = 2;
        std::fs::write(&path, &bad_version).unwrap();
        assert!(matches!(DemonstrationSet::load(&path), Err(DemoFileError::UnsupportedVersion(2))));

        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(matches!(DemonstrationSet::load(&path), Err(DemoFileError::Truncated)));
    }
}
