//! The secret template bank: abstraction of raw AMR graphs into placeholder
//! templates, frequency-filtered bank construction, and the line-oriented
//! bank file that acts as the private key.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::amr::{
    canonicalize, parse_penman, serialize_penman, AmrGraph, AmrGraphBuilder, NodeRef, PenmanError,
};

/// Placeholder for collapsed named-entity subtrees.
pub const PLACEHOLDER_NE: &str = "NE";
/// Placeholder for generic leaf nouns.
pub const PLACEHOLDER_N: &str = "N";
/// Placeholder for underspecified concepts.
pub const PLACEHOLDER_X: &str = "X";

/// True when a concept is one of the three template placeholders.
pub fn is_placeholder(concept: &str) -> bool {
    matches!(concept, PLACEHOLDER_NE | PLACEHOLDER_N | PLACEHOLDER_X)
}

#[derive(Debug, Error)]
pub enum BankError {
    #[error("not enough templates survive the filters: found {found}, needed {needed}")]
    InsufficientTemplates { found: usize, needed: usize },
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("bank file format error at line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("bank file line {line}: {source}")]
    Penman {
        line: usize,
        #[source]
        source: PenmanError,
    },
    #[error("invalid bank parameters: {0}")]
    InvalidParams(String),
}

/// Filters and sizing for bank construction.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct BankParams {
    pub min_freq: u32,
    pub max_freq: u32,
    pub min_nodes: usize,
    pub bank_size: usize,
    pub seed: u64,
}

impl Default for BankParams {
    fn default() -> Self {
        BankParams {
            min_freq: 3,
            max_freq: 20,
            min_nodes: 3,
            bank_size: 50,
            seed: 0,
        }
    }
}

impl BankParams {
    fn validate(&self) -> Result<(), BankError> {
        if self.min_freq < 1 || self.min_freq > self.max_freq {
            return Err(BankError::InvalidParams(format!(
                "need 1 <= min_freq <= max_freq, got {}..{}",
                self.min_freq, self.max_freq
            )));
        }
        if self.min_nodes < 1 {
            return Err(BankError::InvalidParams("min_nodes must be >= 1".into()));
        }
        if self.bank_size < 1 {
            return Err(BankError::InvalidParams("bank_size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Concept sets steering template abstraction. The defaults ship with the
/// crate; all three sets can be overridden from files.
#[derive(Debug, Clone)]
pub struct AbstractionRules {
    ne_concepts: HashSet<String>,
    noun_stoplist: HashSet<String>,
    underspecified: HashSet<String>,
}

fn load_concept_set(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

impl Default for AbstractionRules {
    fn default() -> Self {
        AbstractionRules {
            ne_concepts: load_concept_set(include_str!("data/ne_concepts.txt")),
            noun_stoplist: load_concept_set(include_str!("data/noun_stoplist.txt")),
            underspecified: load_concept_set(include_str!("data/x_concepts.txt")),
        }
    }
}

impl AbstractionRules {
    /// Replaces the named-entity concept set from a list file (one concept
    /// per line, `#` comments allowed).
    pub fn with_ne_concepts_file(mut self, path: &Path) -> Result<Self, BankError> {
        self.ne_concepts = load_concept_set(&fs::read_to_string(path)?);
        Ok(self)
    }

    pub fn is_ne(&self, concept: &str) -> bool {
        self.ne_concepts.contains(concept)
    }
}

/// Abstracts a graph into a template with the default rules: named-entity
/// subtrees collapse to `NE` (dropping `:name`/`:wiki` attachments),
/// underspecified concepts become `X`, and remaining leaf nouns without a
/// PropBank sense suffix become `N`. Graph shape is otherwise preserved,
/// and the operation is idempotent.
pub fn abstract_template(g: &AmrGraph) -> AmrGraph {
    abstract_template_with(g, &AbstractionRules::default())
}

/// [`abstract_template`] with explicit rules.
pub fn abstract_template_with(g: &AmrGraph, rules: &AbstractionRules) -> AmrGraph {
    let n = g.concept_node_count();
    let mut concepts: Vec<String> = g.node_ids().map(|id| g.concept(id).to_string()).collect();
    let mut drop_edge = vec![false; g.edge_count()];

    // Pass 1: NE collapse.
    for (i, concept) in concepts.iter_mut().enumerate() {
        if rules.ne_concepts.contains(concept.as_str()) {
            *concept = PLACEHOLDER_NE.to_string();
            for (ei, e) in g.edges().iter().enumerate() {
                if e.source.index() == i && (e.role == ":name" || e.role == ":wiki") {
                    drop_edge[ei] = true;
                }
            }
        }
    }

    // Reachability after edge drops; unreachable nodes are pruned.
    let mut reachable = vec![false; n];
    let mut stack = vec![g.root().index()];
    reachable[g.root().index()] = true;
    while let Some(u) = stack.pop() {
        for (ei, e) in g.edges().iter().enumerate() {
            if e.source.index() == u && !drop_edge[ei] {
                if let NodeRef::Node(t) = e.target {
                    if !reachable[t.index()] {
                        reachable[t.index()] = true;
                        stack.push(t.index());
                    }
                }
            }
        }
    }

    let mut is_leaf = vec![true; n];
    for (ei, e) in g.edges().iter().enumerate() {
        if !drop_edge[ei] && reachable[e.source.index()] {
            is_leaf[e.source.index()] = false;
        }
    }

    // Pass 2: X for underspecified, N for plain leaf nouns.
    for i in 0..n {
        if !reachable[i] || is_placeholder(&concepts[i]) {
            continue;
        }
        if rules.underspecified.contains(&concepts[i]) {
            concepts[i] = PLACEHOLDER_X.to_string();
        } else if is_leaf[i]
            && !has_sense_suffix(&concepts[i])
            && !rules.noun_stoplist.contains(&concepts[i])
        {
            concepts[i] = PLACEHOLDER_N.to_string();
        }
    }

    let mut b = AmrGraphBuilder::new();
    let mut remap = vec![None; n];
    for id in g.node_ids() {
        if reachable[id.index()] {
            let new = b
                .add_node(g.variable(id), &concepts[id.index()])
                .expect("variables unique in source graph");
            remap[id.index()] = Some(new);
        }
    }
    b.set_root(remap[g.root().index()].expect("root always reachable"))
        .expect("root id valid");
    for (ei, e) in g.edges().iter().enumerate() {
        if drop_edge[ei] || !reachable[e.source.index()] {
            continue;
        }
        let src = remap[e.source.index()].expect("source reachable");
        let target = match &e.target {
            NodeRef::Node(t) => NodeRef::Node(remap[t.index()].expect("target reachable")),
            NodeRef::Constant(c) => NodeRef::Constant(c.clone()),
        };
        b.add_edge(src, &e.role, target).expect("role already valid");
    }
    b.build().expect("pruned graph stays connected")
}

fn has_sense_suffix(concept: &str) -> bool {
    match concept.rfind('-') {
        Some(pos) if pos + 1 < concept.len() => {
            concept[pos + 1..].chars().all(|c| c.is_ascii_digit())
        }
        _ => false,
    }
}

/// One bank entry.
#[derive(Debug, Clone, PartialEq)]
pub struct BankTemplate {
    pub id: u32,
    pub graph: AmrGraph,
    pub frequency: u32,
}

/// The secret key: an ordered set of abstracted template AMRs.
#[derive(Debug, Clone, PartialEq)]
pub struct TemplateBank {
    templates: Vec<BankTemplate>,
    created_from: String,
    params: BankParams,
}

impl TemplateBank {
    /// Assembles a bank from pre-abstracted `(graph, frequency)` pairs,
    /// assigning dense ids in order. The same filter invariants as
    /// [`build_bank`] are enforced.
    pub fn from_templates(
        graphs: Vec<(AmrGraph, u32)>,
        params: BankParams,
    ) -> Result<Self, BankError> {
        params.validate()?;
        let templates: Vec<BankTemplate> = graphs
            .into_iter()
            .enumerate()
            .map(|(i, (graph, frequency))| BankTemplate {
                id: i as u32,
                graph,
                frequency,
            })
            .collect();
        let bank = TemplateBank {
            templates,
            created_from: String::new(),
            params,
        };
        bank.check_invariants()?;
        Ok(bank)
    }

    fn check_invariants(&self) -> Result<(), BankError> {
        for (i, t) in self.templates.iter().enumerate() {
            if t.id as usize != i {
                return Err(BankError::Format {
                    line: i + 2,
                    message: format!("ids must be dense from 0, found {}", t.id),
                });
            }
            if t.graph.concept_node_count() < self.params.min_nodes {
                return Err(BankError::Format {
                    line: i + 2,
                    message: format!(
                        "template {} has {} nodes, below min_nodes {}",
                        t.id,
                        t.graph.concept_node_count(),
                        self.params.min_nodes
                    ),
                });
            }
            if t.frequency < self.params.min_freq || t.frequency > self.params.max_freq {
                return Err(BankError::Format {
                    line: i + 2,
                    message: format!(
                        "template {} frequency {} outside {}..={}",
                        t.id, t.frequency, self.params.min_freq, self.params.max_freq
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn templates(&self) -> &[BankTemplate] {
        &self.templates
    }

    pub fn len(&self) -> usize {
        self.templates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.templates.is_empty()
    }

    pub fn get(&self, id: u32) -> Option<&BankTemplate> {
        self.templates.get(id as usize)
    }

    pub fn params(&self) -> &BankParams {
        &self.params
    }

    /// Digest of the corpus the bank was built from (empty for hand-built
    /// banks).
    pub fn created_from(&self) -> &str {
        &self.created_from
    }
}

/// Builds a bank from a corpus of raw graphs with the default abstraction
/// rules. Every graph is abstracted; frequencies are counted per canonical
/// template string; survivors satisfy `min_freq <= f <= max_freq` and
/// `concept_node_count >= min_nodes`. If more than `bank_size` survive,
/// `bank_size` of them are sampled uniformly without replacement using the
/// params seed. Output is deterministic given corpus order and seed.
pub fn build_bank(
    corpus: impl IntoIterator<Item = AmrGraph>,
    params: &BankParams,
) -> Result<TemplateBank, BankError> {
    build_bank_with(corpus, params, &AbstractionRules::default())
}

/// [`build_bank`] with explicit abstraction rules.
pub fn build_bank_with(
    corpus: impl IntoIterator<Item = AmrGraph>,
    params: &BankParams,
    rules: &AbstractionRules,
) -> Result<TemplateBank, BankError> {
    params.validate()?;
    let mut counts: HashMap<String, (u32, usize)> = HashMap::new();
    let mut hasher = Sha256::new();
    for (order, g) in corpus.into_iter().enumerate() {
        let template = abstract_template_with(&g, rules);
        let canon = canonicalize(&template);
        hasher.update(canon.as_bytes());
        hasher.update(b"\n");
        counts
            .entry(canon)
            .and_modify(|(c, _)| *c += 1)
            .or_insert((1, order));
    }
    let digest = hex_digest(hasher);

    let mut survivors: Vec<(usize, String, u32)> = Vec::new();
    for (canon, (count, first_seen)) in counts {
        if count < params.min_freq || count > params.max_freq {
            continue;
        }
        let graph = parse_penman(&canon).expect("canonical strings reparse");
        if graph.concept_node_count() < params.min_nodes {
            continue;
        }
        survivors.push((first_seen, canon, count));
    }
    survivors.sort_by_key(|(first_seen, _, _)| *first_seen);

    if survivors.len() < params.bank_size {
        return Err(BankError::InsufficientTemplates {
            found: survivors.len(),
            needed: params.bank_size,
        });
    }
    if survivors.len() > params.bank_size {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        let mut picked =
            rand::seq::index::sample(&mut rng, survivors.len(), params.bank_size).into_vec();
        picked.sort_unstable();
        survivors = picked.into_iter().map(|i| survivors[i].clone()).collect();
    }

    let templates = survivors
        .into_iter()
        .enumerate()
        .map(|(i, (_, canon, frequency))| BankTemplate {
            id: i as u32,
            graph: parse_penman(&canon).expect("canonical strings reparse"),
            frequency,
        })
        .collect();
    Ok(TemplateBank {
        templates,
        created_from: digest,
        params: params.clone(),
    })
}

fn hex_digest(hasher: Sha256) -> String {
    let bytes = hasher.finalize();
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Serializes a bank to its line-oriented file form. The file is the
/// private key; callers that persist it should restrict permissions (see
/// the CLI `--insecure` escape hatch).
pub fn bank_to_string(bank: &TemplateBank) -> String {
    let p = &bank.params;
    let mut out = format!(
        "SWANBANK v1 seed={} min_freq={} max_freq={} min_nodes={} size={} digest={}\n",
        p.seed, p.min_freq, p.max_freq, p.min_nodes, bank.templates.len(), bank.created_from
    );
    for t in &bank.templates {
        out.push_str(&format!(
            "{}\t{}\t{}\n",
            t.id,
            t.frequency,
            serialize_penman(&t.graph)
        ));
    }
    out
}

/// Writes the bank file. `load_bank(save_bank(b)) == b` field for field.
pub fn save_bank(bank: &TemplateBank, path: &Path) -> Result<(), BankError> {
    fs::write(path, bank_to_string(bank))?;
    Ok(())
}

/// Restricts a saved bank file to owner read/write (the bank is the secret
/// key). No-op on non-unix platforms.
pub fn restrict_bank_permissions(path: &Path) -> Result<(), BankError> {
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mut perms = fs::metadata(path)?.permissions();
        perms.set_mode(0o600);
        fs::set_permissions(path, perms)?;
    }
    #[cfg(not(unix))]
    {
        let _ = path;
    }
    Ok(())
}

/// True when the file is readable by group or other (unix only; false
/// elsewhere).
pub fn is_world_readable(path: &Path) -> Result<bool, BankError> {
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let mode = fs::metadata(path)?.permissions().mode();
        Ok(mode & 0o044 != 0)
    }
    #[cfg(not(unix))]
    {
        let _ = path;
        Ok(false)
    }
}

/// Reads a bank file, validating header, dense ids, and the build filters.
pub fn load_bank(path: &Path) -> Result<TemplateBank, BankError> {
    bank_from_str(&fs::read_to_string(path)?)
}

/// Parses bank file content. Filter invariants are re-asserted here, not
/// only at build time.
pub fn bank_from_str(content: &str) -> Result<TemplateBank, BankError> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines.next().ok_or(BankError::Format {
        line: 1,
        message: "empty file".into(),
    })?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some("SWANBANK") || parts.next() != Some("v1") {
        return Err(BankError::Format {
            line: 1,
            message: "expected `SWANBANK v1` header".into(),
        });
    }
    let mut fields: HashMap<&str, &str> = HashMap::new();
    for kv in parts {
        let (k, v) = kv.split_once('=').ok_or(BankError::Format {
            line: 1,
            message: format!("malformed header field `{kv}`"),
        })?;
        fields.insert(k, v);
    }
    fn field<T: std::str::FromStr>(
        fields: &HashMap<&str, &str>,
        key: &str,
    ) -> Result<T, BankError> {
        fields
            .get(key)
            .ok_or(BankError::Format {
                line: 1,
                message: format!("missing header field `{key}`"),
            })?
            .parse()
            .map_err(|_| BankError::Format {
                line: 1,
                message: format!("invalid header field `{key}`"),
            })
    }
    let size: usize = field(&fields, "size")?;
    let params = BankParams {
        seed: field(&fields, "seed")?,
        min_freq: field(&fields, "min_freq")?,
        max_freq: field(&fields, "max_freq")?,
        min_nodes: field(&fields, "min_nodes")?,
        bank_size: size,
    };
    let created_from = fields.get("digest").unwrap_or(&"").to_string();

    let mut templates = Vec::with_capacity(size);
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let mut cols = line.splitn(3, '\t');
        let (id, freq, penman) = match (cols.next(), cols.next(), cols.next()) {
            (Some(a), Some(b), Some(c)) => (a, b, c),
            _ => {
                return Err(BankError::Format {
                    line: lineno,
                    message: "expected `<id>\\t<frequency>\\t<penman>`".into(),
                })
            }
        };
        let id: u32 = id.parse().map_err(|_| BankError::Format {
            line: lineno,
            message: format!("invalid id `{id}`"),
        })?;
        let frequency: u32 = freq.parse().map_err(|_| BankError::Format {
            line: lineno,
            message: format!("invalid frequency `{freq}`"),
        })?;
        let graph = parse_penman(penman).map_err(|source| BankError::Penman {
            line: lineno,
            source,
        })?;
        templates.push(BankTemplate {
            id,
            graph,
            frequency,
        });
    }
    if templates.len() != size {
        return Err(BankError::Format {
            line: templates.len() + 1,
            message: format!(
                "truncated bank: header promises {size} templates, found {}",
                templates.len()
            ),
        });
    }
    let bank = TemplateBank {
        templates,
        created_from,
        params,
    };
    bank.check_invariants()?;
    Ok(bank)
}
