//! Synthetic desk-scale world for end-to-end decoding experiments.
//!
//! Users own contact lists. Some first names come in a common and a rare
//! spelling that sound alike: the channel hears the rare spelling's token
//! but emits the common one more often. Other rare names are unknown to the
//! recognizer altogether, so their acoustic stream is the common
//! homophone's tokens.

use std::collections::{BTreeMap, BTreeSet};

use ctxbias::bias::BiasPhrase;
use ctxbias::bpe::{word_counts, BpeModel};
use ctxbias::decoder::{decoding_vocab, ChannelConfig, ConfusionTable, NoisyChannelScorer};
use ctxbias::mapper::{Lexicon, UnigramModel};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct WorldParams {
    pub seed: u64,
    pub users: usize,
    pub contacts_per_user: usize,
    pub homophone_pairs: usize,
    pub oov_pairs: usize,
    pub last_names: usize,
    pub entity_utts: usize,
    pub regular_utts: usize,
    pub oov_utts: usize,
    pub lm_sentences: usize,
    /// Share of test entity utterances naming a rare-spelling contact.
    pub rare_share: f64,
    /// Share of entity mentions in the LM corpus left untagged.
    pub untagged_share: f64,
    /// Probability that a rare spelling's token comes out as the common one.
    pub homophone_confusion: f64,
    /// Probability that a regular word comes out as its twin.
    pub regular_confusion: f64,
    /// Emission probability of each tag token, whatever was said.
    pub tag_emission: f64,
    pub noise_std: f64,
    pub floor: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        WorldParams {
            seed: 2024,
            users: 20,
            contacts_per_user: 8,
            homophone_pairs: 16,
            oov_pairs: 10,
            last_names: 20,
            entity_utts: 200,
            regular_utts: 200,
            oov_utts: 100,
            lm_sentences: 3000,
            rare_share: 0.5,
            untagged_share: 0.3,
            homophone_confusion: 0.6,
            regular_confusion: 0.3,
            tag_emission: 0.2,
            noise_std: 1.0,
            floor: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TestUtt {
    pub id: String,
    pub user: usize,
    /// Tagged reference words.
    pub reference: Vec<String>,
}

pub struct World {
    pub params: WorldParams,
    pub bpe: BpeModel,
    pub scorer: NoisyChannelScorer,
    pub contacts: Vec<Vec<BiasPhrase>>,
    pub oov_contacts: Vec<Vec<BiasPhrase>>,
    pub entity: Vec<TestUtt>,
    pub regular: Vec<TestUtt>,
    pub oov: Vec<TestUtt>,
    pub lexicon: Lexicon,
    pub unigram: UnigramModel,
    /// Rare OOV spelling to its common homophone.
    pub oov_truth: BTreeMap<String, String>,
}

const CONSONANTS: &[&str] = &["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"];
const VOWELS: &[&str] = &["a", "e", "i", "o", "u"];

fn fresh_word(rng: &mut ChaCha8Rng, used: &mut BTreeSet<String>, syllables: std::ops::RangeInclusive<usize>) -> String {
    loop {
        let n = rng.random_range(syllables.clone());
        let w: String = (0..n)
            .map(|_| format!("{}{}", CONSONANTS.choose(rng).unwrap(), VOWELS.choose(rng).unwrap()))
            .collect();
        if used.insert(w.clone()) {
            return w;
        }
    }
}

/// A different spelling of `word`: a doubled consonant or an added `h`.
fn variant(rng: &mut ChaCha8Rng, word: &str, used: &mut BTreeSet<String>) -> String {
    let chars: Vec<char> = word.chars().collect();
    for _ in 0..100 {
        let i = rng.random_range(0..chars.len());
        let mut v: String = chars[..=i].iter().collect();
        if VOWELS.contains(&chars[i].to_string().as_str()) {
            v.push('h');
        } else {
            v.push(chars[i]);
        }
        v.extend(&chars[i + 1..]);
        if used.insert(v.clone()) {
            return v;
        }
    }
    panic!("no spelling variant for {word}");
}

fn pron(word: &str) -> Vec<String> {
    word.chars().map(|c| c.to_ascii_uppercase().to_string()).collect()
}

const ENTITY_TEMPLATES: &[&str] = &[
    "call {}",
    "call {} mobile",
    "text {}",
    "send a message to {}",
    "phone {} at home",
    "email {} about the report",
];

struct Regular {
    templates: Vec<(&'static str, usize)>,
    pools: Vec<Vec<String>>,
}

impl Regular {
    fn new() -> Self {
        let pool = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        Regular {
            templates: vec![
                ("what is the weather in {}", 0),
                ("set an alarm for {} tomorrow", 1),
                ("play some {} music", 2),
                ("turn off the {} lights", 3),
                ("remind me to buy {}", 4),
                ("how far is {} from here", 0),
            ],
            pools: vec![
                pool(&["austin", "boston", "denver", "dallas", "paris", "berlin", "madrid", "tokyo"]),
                pool(&["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"]),
                pool(&["jazz", "rock", "blues", "folk", "metal", "soul"]),
                pool(&["kitchen", "bedroom", "garage", "hallway", "office"]),
                pool(&["milk", "bread", "eggs", "apples", "coffee", "butter", "rice", "tea"]),
            ],
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> String {
        let (t, p) = self.templates.choose(rng).unwrap();
        t.replace("{}", self.pools[*p].choose(rng).unwrap())
    }

    /// Each pool word paired with its neighbour in the pool.
    fn twins(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for pool in &self.pools {
            for (i, w) in pool.iter().enumerate() {
                out.push((w.clone(), pool[(i + 1) % pool.len()].clone()));
            }
        }
        out
    }
}

fn tagged(template: &str, name: &str, tag: bool) -> String {
    if tag {
        template.replace("{}", &format!("@contact# {name} #contact@"))
    } else {
        template.replace("{}", name)
    }
}

impl World {
    pub fn build(params: WorldParams) -> World {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let regular = Regular::new();
        let mut used: BTreeSet<String> = regular.pools.iter().flatten().cloned().collect();
        for t in ENTITY_TEMPLATES.iter().chain(regular.templates.iter().map(|(t, _)| t)) {
            used.extend(t.split_whitespace().map(str::to_string));
        }

        let homophones: Vec<(String, String)> = (0..params.homophone_pairs)
            .map(|_| {
                let common = fresh_word(&mut rng, &mut used, 2..=2);
                let rare = variant(&mut rng, &common, &mut used);
                (common, rare)
            })
            .collect();
        let oov_pairs: Vec<(String, String)> = (0..params.oov_pairs)
            .map(|_| {
                let common = fresh_word(&mut rng, &mut used, 2..=3);
                let rare = variant(&mut rng, &common, &mut used);
                (common, rare)
            })
            .collect();
        let lasts: Vec<String> = (0..params.last_names).map(|_| fresh_word(&mut rng, &mut used, 2..=3)).collect();
        let commons: Vec<&String> = homophones.iter().map(|(c, _)| c).chain(oov_pairs.iter().map(|(c, _)| c)).collect();

        // Language-model text: relabeled training transcripts.
        let mut lm_lines: Vec<String> = Vec::new();
        for _ in 0..params.lm_sentences {
            if rng.random_bool(0.5) {
                let first = commons.choose(&mut rng).unwrap();
                let name = format!("{first} {}", lasts.choose(&mut rng).unwrap());
                let t = ENTITY_TEMPLATES.choose(&mut rng).unwrap();
                lm_lines.push(tagged(t, &name, !rng.random_bool(params.untagged_share)));
            } else {
                lm_lines.push(regular.sample(&mut rng));
            }
        }
        // Rare homophone spellings are seen, but only a couple of times each.
        for (_, rare) in &homophones {
            for _ in 0..2 {
                let t = ENTITY_TEMPLATES.choose(&mut rng).unwrap();
                let name = format!("{rare} {}", lasts.choose(&mut rng).unwrap());
                lm_lines.push(tagged(t, &name, true));
            }
        }

        let tags: Vec<String> = vec!["@contact#".into(), "#contact@".into()];
        let bpe = BpeModel::learn(word_counts(&lm_lines), 4000, &tags).unwrap();
        let vocab = decoding_vocab(&bpe).unwrap();
        let training: Vec<Vec<String>> = lm_lines.iter().map(|l| bpe.apply(l)).collect();

        // Contact lists.
        let make_contacts = |rng: &mut ChaCha8Rng, pairs: &[(String, String)]| -> Vec<Vec<BiasPhrase>> {
            (0..params.users)
                .map(|_| {
                    let mut seen = BTreeSet::new();
                    let mut list = Vec::new();
                    while list.len() < params.contacts_per_user {
                        let (common, rare) = pairs.choose(rng).unwrap();
                        let first = if rng.random_bool(0.5) { rare } else { common };
                        let name = format!("{first} {}", lasts.choose(rng).unwrap());
                        if seen.insert(name.clone()) {
                            list.push(BiasPhrase::new(&name, 1.0));
                        }
                    }
                    list
                })
                .collect()
        };
        let contacts = make_contacts(&mut rng, &homophones);
        let oov_contacts = make_contacts(&mut rng, &oov_pairs);

        let rare_of: BTreeSet<&str> = homophones.iter().map(|(_, r)| r.as_str()).collect();
        let oov_rare: BTreeMap<&str, &str> = oov_pairs.iter().map(|(c, r)| (r.as_str(), c.as_str())).collect();

        let mut references: BTreeMap<String, Vec<String>> = BTreeMap::new();
        let pick_entity = |rng: &mut ChaCha8Rng, lists: &[Vec<BiasPhrase>], id: String, rare: &dyn Fn(&str) -> bool| {
            let user = rng.random_range(0..lists.len());
            let list = &lists[user];
            let want_rare = rng.random_bool(params.rare_share);
            let pool: Vec<&BiasPhrase> = list.iter().filter(|p| rare(&p.words[0]) == want_rare).collect();
            let phrase = if pool.is_empty() { list.choose(rng).unwrap() } else { *pool.choose(rng).unwrap() };
            let t = ENTITY_TEMPLATES.choose(rng).unwrap();
            let reference: Vec<String> = tagged(t, &phrase.text(), true).split(' ').map(str::to_string).collect();
            TestUtt { id, user, reference }
        };

        let entity: Vec<TestUtt> = (0..params.entity_utts)
            .map(|i| pick_entity(&mut rng, &contacts, format!("ent{i:04}"), &|w| rare_of.contains(w)))
            .collect();
        let oov: Vec<TestUtt> = (0..params.oov_utts)
            .map(|i| pick_entity(&mut rng, &oov_contacts, format!("oov{i:04}"), &|w| oov_rare.contains_key(w)))
            .collect();
        let regular_utts: Vec<TestUtt> = (0..params.regular_utts)
            .map(|i| TestUtt {
                id: format!("reg{i:04}"),
                user: rng.random_range(0..params.users),
                reference: regular.sample(&mut rng).split(' ').map(str::to_string).collect(),
            })
            .collect();

        // What the recognizer hears: untagged tokens, with unknown rare
        // spellings replaced by their common homophone.
        for u in entity.iter().chain(&regular_utts) {
            let words: Vec<&str> = u.reference.iter().map(String::as_str).filter(|w| !w.starts_with(['@', '#'])).collect();
            references.insert(u.id.clone(), bpe.apply_words(&words));
        }
        for u in &oov {
            let words: Vec<&str> = u
                .reference
                .iter()
                .map(String::as_str)
                .filter(|w| !w.starts_with(['@', '#']))
                .map(|w| oov_rare.get(w).copied().unwrap_or(w))
                .collect();
            references.insert(u.id.clone(), bpe.apply_words(&words));
        }

        let mut rows: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
        let single = |w: &str| {
            let t = bpe.segment_word(w);
            assert_eq!(t.len(), 1, "{w} is not a single token");
            t.into_iter().next().unwrap()
        };
        for (common, rare) in &homophones {
            let (c, r) = (single(common), single(rare));
            let row = rows.entry(r.clone()).or_default();
            row.insert(c, params.homophone_confusion);
            row.insert(r, 1.0 - params.homophone_confusion);
        }
        for (w, twin) in regular.twins() {
            let row = rows.entry(single(&w)).or_default();
            row.insert(single(&twin), params.regular_confusion);
            row.insert(single(&w), 1.0 - params.regular_confusion);
        }
        let skip = rows.entry("<eps>".to_string()).or_default();
        skip.insert("@contact#".into(), params.tag_emission);
        skip.insert("#contact@".into(), params.tag_emission);
        let confusion = ConfusionTable::new(rows).unwrap();

        let cfg = ChannelConfig {
            order: 3,
            lm_weight: 1.0,
            floor: params.floor,
            noise_std: params.noise_std,
            seed: params.seed,
        };
        let scorer = NoisyChannelScorer::new(vocab, &training, &references, &confusion, cfg).unwrap();

        // Pronunciation resources for mapping rare spellings.
        let mut lexicon = Lexicon::new();
        let mut counts: Vec<(String, f64)> = Vec::new();
        for (w, c) in word_counts(&lm_lines) {
            lexicon.add(&w, pron(&w));
            counts.push((w, c as f64));
        }
        let mut oov_truth = BTreeMap::new();
        for (common, rare) in &oov_pairs {
            lexicon.add(rare, pron(common));
            oov_truth.insert(rare.clone(), common.clone());
        }
        for (common, rare) in &homophones {
            lexicon.add(rare, pron(common));
        }
        let unigram = UnigramModel::from_counts(counts).unwrap();

        World {
            params,
            bpe,
            scorer,
            contacts,
            oov_contacts,
            entity,
            regular: regular_utts,
            oov,
            lexicon,
            unigram,
            oov_truth,
        }
    }
}
