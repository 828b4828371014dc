use serde::{Deserialize, Serialize};

use super::{AlignmentError, PhoneKind, PhoneTable, PhonemeInterval, PhonemeTier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Syllable {
    pub phonemes: Vec<PhonemeInterval>,
    /// Index of each phoneme in the source tier.
    pub tier_indices: Vec<usize>,
    /// Position of the vowel nucleus within `phonemes`.
    pub nucleus_index: usize,
    pub start_s: f64,
    pub end_s: f64,
}

impl Syllable {
    /// Sum of member phoneme durations.
    pub fn duration_s(&self) -> f64 {
        self.phonemes.iter().map(PhonemeInterval::duration_s).sum()
    }

    pub fn nucleus(&self) -> &PhonemeInterval {
        &self.phonemes[self.nucleus_index]
    }

    pub fn consonant_duration_s(&self) -> f64 {
        self.phonemes
            .iter()
            .filter(|p| p.kind != PhoneKind::Vowel)
            .map(PhonemeInterval::duration_s)
            .sum()
    }

    pub fn vowel_duration_s(&self) -> f64 {
        self.phonemes
            .iter()
            .filter(|p| p.kind == PhoneKind::Vowel)
            .map(PhonemeInterval::duration_s)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SyllableSequence {
    pub syllables: Vec<Syllable>,
}

impl SyllableSequence {
    pub fn len(&self) -> usize {
        self.syllables.len()
    }

    pub fn is_empty(&self) -> bool {
        self.syllables.is_empty()
    }

    pub fn durations_s(&self) -> Vec<f64> {
        self.syllables.iter().map(Syllable::duration_s).collect()
    }
}

/// Groups phonemes into syllables around vowel nuclei.
///
/// Consonants between two vowels are split by maximal onset: the longest
/// suffix of the cluster that is a legal onset starts the next syllable and
/// the rest closes the previous one. A silence inside a cluster is a hard
/// boundary: consonants before it stay with the previous syllable, consonants
/// after it go to the next. Leading and trailing consonants attach to the
/// first and last syllable. Silences belong to no syllable.
pub fn syllabify(tier: &PhonemeTier, table: &PhoneTable) -> Result<SyllableSequence, AlignmentError> {
    let ivs = &tier.intervals;
    let vowels: Vec<usize> = ivs
        .iter()
        .enumerate()
        .filter(|(_, p)| p.kind == PhoneKind::Vowel)
        .map(|(i, _)| i)
        .collect();
    if vowels.is_empty() {
        return Err(AlignmentError::NoVowels);
    }

    // member tier indices per syllable
    let mut members: Vec<Vec<usize>> = vowels.iter().map(|&v| vec![v]).collect();

    let consonants_in = |lo: usize, hi: usize| -> Vec<usize> {
        (lo..hi).filter(|&i| ivs[i].kind == PhoneKind::Consonant).collect()
    };

    // leading consonants
    let lead = consonants_in(0, vowels[0]);
    members[0].splice(0..0, lead);

    for k in 0..vowels.len() - 1 {
        let (a, b) = (vowels[k], vowels[k + 1]);
        let last_silence = (a + 1..b).rev().find(|&i| ivs[i].kind == PhoneKind::Silence);
        let (coda, onset) = match last_silence {
            Some(s) => (consonants_in(a + 1, s), consonants_in(s + 1, b)),
            None => {
                let cluster = consonants_in(a + 1, b);
                let labels: Vec<&str> = cluster.iter().map(|&i| ivs[i].label.as_str()).collect();
                let split = (0..=cluster.len())
                    .find(|&cut| table.is_legal_onset(&labels[cut..]))
                    .unwrap_or(cluster.len());
                (cluster[..split].to_vec(), cluster[split..].to_vec())
            }
        };
        members[k].extend(coda);
        members[k + 1].splice(0..0, onset);
    }

    let trail = consonants_in(vowels[vowels.len() - 1] + 1, ivs.len());
    members.last_mut().expect("at least one vowel").extend(trail);

    let syllables = members
        .into_iter()
        .map(|idx| {
            let phonemes: Vec<PhonemeInterval> = idx.iter().map(|&i| ivs[i].clone()).collect();
            let nucleus_index = phonemes
                .iter()
                .position(|p| p.kind == PhoneKind::Vowel)
                .expect("syllable built around a vowel");
            Syllable {
                start_s: phonemes[0].start_s,
                end_s: phonemes[phonemes.len() - 1].end_s,
                phonemes,
                tier_indices: idx,
                nucleus_index,
            }
        })
        .collect();
    Ok(SyllableSequence { syllables })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tier(labels: &[&str]) -> PhonemeTier {
        let raw = labels
            .iter()
            .enumerate()
            .map(|(i, l)| (l.to_string(), i as f64 * 0.1, (i + 1) as f64 * 0.1))
            .collect();
        PhonemeTier::from_raw(raw, &PhoneTable::builtin()).unwrap()
    }

    fn labels(s: &SyllableSequence) -> Vec<Vec<String>> {
        s.syllables
            .iter()
            .map(|syl| syl.phonemes.iter().map(|p| p.label.clone()).collect())
            .collect()
    }

    #[test]
    fn single_vowel() {
        let s = syllabify(&tier(&["HH", "IH1", "Z"]), &PhoneTable::builtin()).unwrap();
        assert_eq!(labels(&s), vec![vec!["HH", "IH1", "Z"]]);
        assert_eq!(s.syllables[0].nucleus_index, 1);
    }

    #[test]
    fn opening() {
        let s = syllabify(
            &tier(&["OW1", "P", "AH0", "N", "IH0", "NG"]),
            &PhoneTable::builtin(),
        )
        .unwrap();
        assert_eq!(
            labels(&s),
            vec![vec!["OW1"], vec!["P", "AH0"], vec!["N", "IH0", "NG"]]
        );
    }

    #[test]
    fn str_onset() {
        let s = syllabify(&tier(&["S", "T", "R", "IY1"]), &PhoneTable::builtin()).unwrap();
        assert_eq!(labels(&s), vec![vec!["S", "T", "R", "IY1"]]);
    }

    #[test]
    fn illegal_cluster_splits() {
        // "atlas": T L is not an onset, so T closes the first syllable
        let s = syllabify(&tier(&["AE1", "T", "L", "AH0", "S"]), &PhoneTable::builtin()).unwrap();
        assert_eq!(labels(&s), vec![vec!["AE1", "T"], vec!["L", "AH0", "S"]]);
        // "extra": K S T R -> K | S T R
        let s = syllabify(
            &tier(&["EH1", "K", "S", "T", "R", "AH0"]),
            &PhoneTable::builtin(),
        )
        .unwrap();
        assert_eq!(labels(&s), vec![vec!["EH1", "K"], vec!["S", "T", "R", "AH0"]]);
    }

    #[test]
    fn silence_is_a_boundary_and_excluded() {
        let s = syllabify(
            &tier(&["sil", "HH", "IH1", "Z", "sp", "D", "AO1", "R", "sil"]),
            &PhoneTable::builtin(),
        )
        .unwrap();
        assert_eq!(labels(&s), vec![vec!["HH", "IH1", "Z"], vec!["D", "AO1", "R"]]);
        assert_eq!(s.syllables[1].tier_indices, vec![5, 6, 7]);
    }

    #[test]
    fn no_vowels_is_an_error() {
        assert!(matches!(
            syllabify(&tier(&["S", "T"]), &PhoneTable::builtin()),
            Err(AlignmentError::NoVowels)
        ));
    }
}
