//! Coded transmission schemes ("CGRAS"): which relays learn which
//! messages, the codewords each relay sends, who decodes them, and how
//! codewords are layered by superposition.
//!
//! A scheme is stored as a list of codewords plus directed superposition
//! edges `base → top`. Only the partial order generated by the edges
//! matters, so the canonical text form lists the transitive reduction.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{NodeSet, NUM_RECEIVERS, NUM_RELAYS};

const RELAY_MIRROR: [usize; NUM_RELAYS] = [1, 0];
const RECEIVER_MIRROR: [usize; NUM_RECEIVERS] = [2, 1, 0];
const SHARE_TOL: f64 = 1e-9;

/// Messages decoded at each relay over the relay link.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MessageAllocation {
    known: [NodeSet; NUM_RELAYS],
}

impl MessageAllocation {
    /// Build from the message sets of relay 1 and relay 2 (0-based message indices).
    pub fn new(relay1: NodeSet, relay2: NodeSet) -> Result<Self> {
        let full = NodeSet::full(NUM_RECEIVERS);
        if !relay1.union(relay2).eq(&full) || !relay1.is_subset(full) || !relay2.is_subset(full) {
            return Err(Error::InvalidScheme(format!(
                "allocation {relay1}|{relay2} must cover messages 1, 2 and 3"
            )));
        }
        Ok(MessageAllocation { known: [relay1, relay2] })
    }

    /// Convenience constructor from 1-based message lists, e.g. `from_lists(&[1], &[2, 3])`.
    pub fn from_lists(relay1: &[usize], relay2: &[usize]) -> Result<Self> {
        let conv = |l: &[usize]| NodeSet::from_indices(l.iter().map(|m| m - 1));
        Self::new(conv(relay1), conv(relay2))
    }

    /// Messages known at `relay`.
    pub fn messages(&self, relay: usize) -> NodeSet {
        self.known[relay]
    }

    /// Relays that know `message`.
    pub fn knowing(&self, message: usize) -> NodeSet {
        NodeSet::from_indices((0..NUM_RELAYS).filter(|&j| self.known[j].contains(message)))
    }

    pub fn shared_messages(&self) -> usize {
        self.known[0].intersection(self.known[1]).len()
    }

    pub fn cooperation_level(&self) -> CooperationLevel {
        match self.shared_messages() {
            0 => CooperationLevel::None,
            1 => CooperationLevel::PartialOne,
            2 => CooperationLevel::PartialTwo,
            _ => CooperationLevel::Full,
        }
    }

    pub fn mirrored(&self) -> Self {
        MessageAllocation {
            known: [
                self.known[1].permute(&RECEIVER_MIRROR),
                self.known[0].permute(&RECEIVER_MIRROR),
            ],
        }
    }
}

impl fmt::Display for MessageAllocation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|{}", self.known[0], self.known[1])
    }
}

/// How many messages the two relays share.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CooperationLevel {
    None,
    PartialOne,
    PartialTwo,
    Full,
}

impl fmt::Display for CooperationLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CooperationLevel::None => "none",
            CooperationLevel::PartialOne => "partial-1",
            CooperationLevel::PartialTwo => "partial-2",
            CooperationLevel::Full => "full",
        })
    }
}

/// One codeword `U{tx→rx}(Wz)` carrying `share` of message `z`'s rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Codeword {
    /// Message index, 0-based.
    pub message: usize,
    /// Transmitting relays.
    pub tx: NodeSet,
    /// Receivers that decode this codeword.
    pub rx: NodeSet,
    pub share: f64,
}

impl Codeword {
    pub fn new(message: usize, tx: NodeSet, rx: NodeSet) -> Self {
        Codeword { message, tx, rx, share: 1.0 }
    }

    fn sort_key(&self) -> (usize, NodeSet, NodeSet) {
        (self.message, self.tx, self.rx)
    }

    fn mirrored(&self) -> Self {
        Codeword {
            message: RECEIVER_MIRROR[self.message],
            tx: self.tx.permute(&RELAY_MIRROR),
            rx: self.rx.permute(&RECEIVER_MIRROR),
            share: self.share,
        }
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "U{{{}→{}}}(W{}:{})", self.tx, self.rx, self.message + 1, self.share)
    }
}

/// A structural rule broken by a scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Violation {
    UnknownMessage { codeword: usize },
    EmptyTx { codeword: usize },
    EmptyRx { codeword: usize },
    /// The codeword is sent by a relay that does not know its message.
    TxNotKnowing { codeword: usize },
    /// A part of message z is not decoded by receiver z.
    NotDecodedByIntended { codeword: usize },
    DuplicateCodeword { first: usize, second: usize },
    EdgeOutOfRange { base: usize, top: usize },
    /// The top codeword is sent by a relay that does not send the base.
    EdgeTxNotSubset { base: usize, top: usize },
    Cycle { codeword: usize },
    /// A receiver decodes the top of an edge but not its base.
    DecodeClosure { receiver: usize, base: usize, top: usize },
    MissingMessage { message: usize },
    ShareOutOfRange { codeword: usize },
    ShareSum { message: usize, sum: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            UnknownMessage { codeword } => write!(f, "codeword {codeword}: message index out of range"),
            EmptyTx { codeword } => write!(f, "codeword {codeword}: empty transmitter set"),
            EmptyRx { codeword } => write!(f, "codeword {codeword}: empty receiver set"),
            TxNotKnowing { codeword } => {
                write!(f, "codeword {codeword}: tx not subset of knowing relays")
            }
            NotDecodedByIntended { codeword } => {
                write!(f, "codeword {codeword}: not decoded by its intended receiver")
            }
            DuplicateCodeword { first, second } => {
                write!(f, "codewords {first} and {second} have identical message, tx and rx")
            }
            EdgeOutOfRange { base, top } => write!(f, "edge {base}<{top}: codeword index out of range"),
            EdgeTxNotSubset { base, top } => {
                write!(f, "edge {base}<{top}: tx of top not subset of tx of base")
            }
            Cycle { codeword } => write!(f, "superposition cycle through codeword {codeword}"),
            DecodeClosure { receiver, base, top } => write!(
                f,
                "receiver {} decodes top {top} but not its base {base}",
                receiver + 1
            ),
            MissingMessage { message } => write!(f, "message {} has no codeword", message + 1),
            ShareOutOfRange { codeword } => write!(f, "codeword {codeword}: share outside (0, 1]"),
            ShareSum { message, sum } => {
                write!(f, "message {}: shares sum to {sum}, expected 1", message + 1)
            }
        }
    }
}

/// Canonical identity of a scheme up to the relay/receiver mirror symmetry.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SchemeKey(pub String);

impl fmt::Display for SchemeKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A coded transmission scheme.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cgras {
    pub allocation: MessageAllocation,
    pub codewords: Vec<Codeword>,
    /// Superposition edges `(base, top)` as codeword indices.
    pub edges: Vec<(usize, usize)>,
}

impl Cgras {
    pub fn new(allocation: MessageAllocation, codewords: Vec<Codeword>, edges: Vec<(usize, usize)>) -> Self {
        Cgras { allocation, codewords, edges }
    }

    /// Build and reject the scheme if any structural rule fails.
    pub fn checked(
        allocation: MessageAllocation,
        codewords: Vec<Codeword>,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let c = Cgras::new(allocation, codewords, edges);
        let violations = c.validate();
        if violations.is_empty() {
            Ok(c)
        } else {
            let msgs: Vec<String> = violations.iter().map(ToString::to_string).collect();
            Err(Error::InvalidScheme(msgs.join("; ")))
        }
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    /// Γ: for each message, the `(codeword, share)` pairs that carry it.
    pub fn split_map(&self) -> [Vec<(usize, f64)>; NUM_RECEIVERS] {
        let mut map: [Vec<(usize, f64)>; NUM_RECEIVERS] = Default::default();
        for (i, cw) in self.codewords.iter().enumerate() {
            if cw.message < NUM_RECEIVERS {
                map[cw.message].push((i, cw.share));
            }
        }
        map
    }

    /// True when some message is carried by more than one codeword.
    pub fn has_splits(&self) -> bool {
        self.split_map().iter().any(|parts| parts.len() > 1)
    }

    pub fn cooperation_level(&self) -> CooperationLevel {
        self.allocation.cooperation_level()
    }

    /// Bitmask of codewords decoded at `receiver`.
    pub fn decode_mask(&self, receiver: usize) -> u32 {
        self.codewords
            .iter()
            .enumerate()
            .filter(|(_, cw)| cw.rx.contains(receiver))
            .fold(0, |m, (i, _)| m | 1 << i)
    }

    /// For each codeword, the mask of codewords layered (transitively) on top of it.
    /// Edges with out-of-range endpoints are ignored.
    pub fn above_masks(&self) -> Vec<u32> {
        let n = self.codewords.len();
        let mut above = vec![0u32; n];
        for &(b, t) in &self.edges {
            if b < n && t < n {
                above[b] |= 1 << t;
            }
        }
        transitive_closure(&mut above);
        above
    }

    /// Check every structural rule and report all violations.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.codewords.len();
        for (i, cw) in self.codewords.iter().enumerate() {
            if cw.message >= NUM_RECEIVERS {
                out.push(Violation::UnknownMessage { codeword: i });
                continue;
            }
            if cw.tx.is_empty() {
                out.push(Violation::EmptyTx { codeword: i });
            }
            if cw.rx.is_empty() {
                out.push(Violation::EmptyRx { codeword: i });
            }
            if !cw.tx.is_subset(self.allocation.knowing(cw.message)) {
                out.push(Violation::TxNotKnowing { codeword: i });
            }
            if !cw.rx.contains(cw.message) {
                out.push(Violation::NotDecodedByIntended { codeword: i });
            }
            if !(cw.share > 0.0 && cw.share <= 1.0 + SHARE_TOL) {
                out.push(Violation::ShareOutOfRange { codeword: i });
            }
            for (k, other) in self.codewords.iter().enumerate().skip(i + 1) {
                if other.sort_key() == cw.sort_key() {
                    out.push(Violation::DuplicateCodeword { first: i, second: k });
                }
            }
        }
        for (z, parts) in self.split_map().iter().enumerate() {
            if parts.is_empty() {
                out.push(Violation::MissingMessage { message: z });
            } else {
                let sum: f64 = parts.iter().map(|p| p.1).sum();
                if (sum - 1.0).abs() > SHARE_TOL {
                    out.push(Violation::ShareSum { message: z, sum });
                }
            }
        }
        for &(b, t) in &self.edges {
            if b >= n || t >= n {
                out.push(Violation::EdgeOutOfRange { base: b, top: t });
                continue;
            }
            let (base, top) = (&self.codewords[b], &self.codewords[t]);
            if !top.tx.is_subset(base.tx) {
                out.push(Violation::EdgeTxNotSubset { base: b, top: t });
            }
            for z in top.rx.iter() {
                if !base.rx.contains(z) {
                    out.push(Violation::DecodeClosure { receiver: z, base: b, top: t });
                }
            }
        }
        let above = self.above_masks();
        for (i, m) in above.iter().enumerate() {
            if m >> i & 1 == 1 {
                out.push(Violation::Cycle { codeword: i });
            }
        }
        out
    }

    /// Codewords sorted by (message, tx, rx) and edges reduced to the covering relation.
    /// Requires an acyclic scheme.
    pub fn normalized(&self) -> Cgras {
        let n = self.codewords.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let (ca, cb) = (&self.codewords[a], &self.codewords[b]);
            ca.sort_key().cmp(&cb.sort_key()).then(ca.share.total_cmp(&cb.share))
        });
        let mut pos = vec![0; n];
        for (new, &old) in order.iter().enumerate() {
            pos[old] = new;
        }
        let codewords = order.iter().map(|&i| self.codewords[i]).collect();
        let mut above = vec![0u32; n];
        for &(b, t) in &self.edges {
            if b < n && t < n {
                above[pos[b]] |= 1 << pos[t];
            }
        }
        transitive_closure(&mut above);
        Cgras { allocation: self.allocation, codewords, edges: transitive_reduction(&above) }
    }

    /// The scheme obtained by swapping relay 1 ↔ relay 2 and receiver 1 ↔ receiver 3.
    pub fn mirrored(&self) -> Cgras {
        Cgras {
            allocation: self.allocation.mirrored(),
            codewords: self.codewords.iter().map(Codeword::mirrored).collect(),
            edges: self.edges.clone(),
        }
    }

    /// Canonical text of this exact scheme (no symmetry folding).
    pub fn canonical_text(&self) -> String {
        self.normalized().to_string()
    }

    /// Key shared by a scheme and its mirror image.
    pub fn canonicalize(&self) -> SchemeKey {
        let own = self.canonical_text();
        let mirror = self.mirrored().canonical_text();
        SchemeKey(own.min(mirror))
    }
}

impl fmt::Display for Cgras {
    /// `1|23; U{1→1}(W1:1) U{2→23}(W2:1) U{2→3}(W3:1); 1<2`
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};", self.allocation)?;
        for cw in &self.codewords {
            write!(f, " {cw}")?;
        }
        f.write_str(";")?;
        for (b, t) in &self.edges {
            write!(f, " {b}<{t}")?;
        }
        Ok(())
    }
}

impl FromStr for Cgras {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::Parse { input: s.to_string(), reason: reason.to_string() };
        let mut parts = s.split(';');
        let alloc_txt = parts.next().ok_or_else(|| err("missing allocation"))?.trim();
        let cw_txt = parts.next().ok_or_else(|| err("missing codeword list"))?;
        let edge_txt = parts.next().unwrap_or("");
        if parts.next().is_some() {
            return Err(err("too many `;` sections"));
        }
        let (r1, r2) = alloc_txt.split_once('|').ok_or_else(|| err("allocation needs `|`"))?;
        let r1 = NodeSet::parse_digits(r1.trim()).ok_or_else(|| err("bad relay 1 message set"))?;
        let r2 = NodeSet::parse_digits(r2.trim()).ok_or_else(|| err("bad relay 2 message set"))?;
        let allocation = MessageAllocation::new(r1, r2)?;

        let mut codewords = Vec::new();
        for tok in cw_txt.split_whitespace() {
            codewords.push(parse_codeword(tok).ok_or_else(|| err(&format!("bad codeword `{tok}`")))?);
        }
        let mut edges = Vec::new();
        for tok in edge_txt.split_whitespace() {
            let (b, t) = tok.split_once('<').ok_or_else(|| err(&format!("bad edge `{tok}`")))?;
            let b = b.parse().map_err(|_| err(&format!("bad edge `{tok}`")))?;
            let t = t.parse().map_err(|_| err(&format!("bad edge `{tok}`")))?;
            edges.push((b, t));
        }
        Ok(Cgras { allocation, codewords, edges })
    }
}

fn parse_codeword(tok: &str) -> Option<Codeword> {
    let rest = tok.strip_prefix("U{")?;
    let (sets, rest) = rest.split_once('}')?;
    let (tx, rx) = sets.split_once('→').or_else(|| sets.split_once("->"))?;
    let inner = rest.strip_prefix("(W")?.strip_suffix(')')?;
    let (msg, share) = match inner.split_once(':') {
        Some((m, s)) => (m, s.parse::<f64>().ok()?),
        None => (inner, 1.0),
    };
    let message: usize = msg.parse().ok()?;
    if message == 0 {
        return None;
    }
    Some(Codeword {
        message: message - 1,
        tx: NodeSet::parse_digits(tx)?,
        rx: NodeSet::parse_digits(rx)?,
        share,
    })
}

fn transitive_closure(above: &mut [u32]) {
    let n = above.len();
    for k in 0..n {
        for i in 0..n {
            if above[i] >> k & 1 == 1 {
                above[i] |= above[k];
            }
        }
    }
}

/// Covering pairs of a transitively closed acyclic relation.
fn transitive_reduction(above: &[u32]) -> Vec<(usize, usize)> {
    let n = above.len();
    let mut edges = Vec::new();
    for b in 0..n {
        for t in 0..n {
            if above[b] >> t & 1 == 0 {
                continue;
            }
            let via = (0..n).any(|m| m != t && above[b] >> m & 1 == 1 && above[m] >> t & 1 == 1);
            if !via {
                edges.push((b, t));
            }
        }
    }
    edges
}

/// Every allocation in which each message reaches relay 1, relay 2, or both.
pub fn enumerate_allocations() -> Vec<MessageAllocation> {
    let mut out = Vec::with_capacity(27);
    for code in 0..27usize {
        let (mut r1, mut r2) = (NodeSet::EMPTY, NodeSet::EMPTY);
        let mut c = code;
        for z in 0..NUM_RECEIVERS {
            match c % 3 {
                0 => r1 = r1.with(z),
                1 => r2 = r2.with(z),
                _ => {
                    r1 = r1.with(z);
                    r2 = r2.with(z);
                }
            }
            c /= 3;
        }
        out.push(MessageAllocation { known: [r1, r2] });
    }
    out
}

/// Which transmitter sets a message's codewords may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TxPolicy {
    /// Every relay that knows a message transmits it.
    #[default]
    Tight,
    /// Any nonempty subset of the knowing relays.
    AnySubset,
}

/// Which superposition orders are generated for a fixed set of codewords.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EdgePolicy {
    /// Every partial order compatible with edge validity and decode closure.
    #[default]
    All,
    /// Only the maximal compatible orders; each dominates its sub-orders.
    Maximal,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumOptions {
    pub allow_splitting: bool,
    /// Maximum number of codewords a single message is split into.
    pub max_splits: usize,
    /// Maximum number of messages that are split in one scheme.
    pub max_split_messages: usize,
    pub tx_policy: TxPolicy,
    pub edge_policy: EdgePolicy,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            allow_splitting: false,
            max_splits: 2,
            max_split_messages: 2,
            tx_policy: TxPolicy::Tight,
            edge_policy: EdgePolicy::All,
        }
    }
}

impl EnumOptions {
    /// Settings used by sweeps: maximal superposition orders, optional splitting.
    pub fn for_sweep(allow_splitting: bool) -> Self {
        EnumOptions { allow_splitting, edge_policy: EdgePolicy::Maximal, ..Default::default() }
    }
}

/// All schemes for one allocation.
pub fn enumerate_schemes(alloc: &MessageAllocation, opts: &EnumOptions) -> Vec<Cgras> {
    // per message: alternatives, each a list of (tx, rx) parts
    let per_message: Vec<Vec<Vec<(NodeSet, NodeSet)>>> = (0..NUM_RECEIVERS)
        .map(|z| message_alternatives(alloc, z, opts))
        .collect();

    let mut out = Vec::new();
    for a0 in &per_message[0] {
        for a1 in &per_message[1] {
            for a2 in &per_message[2] {
                let chosen = [a0, a1, a2];
                let split_count = chosen.iter().filter(|p| p.len() > 1).count();
                if split_count > opts.max_split_messages {
                    continue;
                }
                let mut codewords = Vec::new();
                for (z, parts) in chosen.iter().enumerate() {
                    let share = 1.0 / parts.len() as f64;
                    for &(tx, rx) in parts.iter() {
                        codewords.push(Codeword { message: z, tx, rx, share });
                    }
                }
                for edges in superposition_orders(&codewords, opts.edge_policy) {
                    out.push(Cgras { allocation: *alloc, codewords: codewords.clone(), edges });
                }
            }
        }
    }
    out
}

fn message_alternatives(
    alloc: &MessageAllocation,
    z: usize,
    opts: &EnumOptions,
) -> Vec<Vec<(NodeSet, NodeSet)>> {
    let knowing = alloc.knowing(z);
    let tx_choices = match opts.tx_policy {
        TxPolicy::Tight => vec![knowing],
        TxPolicy::AnySubset => knowing.nonempty_subsets(),
    };
    let others = NodeSet::full(NUM_RECEIVERS).intersection(NodeSet(!NodeSet::single(z).0));
    let rx_choices: Vec<NodeSet> = std::iter::once(NodeSet::EMPTY)
        .chain(others.nonempty_subsets())
        .map(|extra| extra.with(z))
        .collect();
    let max_parts = if opts.allow_splitting { opts.max_splits.max(1) } else { 1 };

    let mut out = Vec::new();
    for &tx in &tx_choices {
        for k in 1..=max_parts.min(rx_choices.len()) {
            for combo in combinations(rx_choices.len(), k) {
                out.push(combo.iter().map(|&i| (tx, rx_choices[i])).collect());
            }
        }
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// `allowed[u]`: codewords that may sit on top of `u`.
fn allowed_above(codewords: &[Codeword]) -> Vec<u32> {
    codewords
        .iter()
        .enumerate()
        .map(|(u, base)| {
            codewords
                .iter()
                .enumerate()
                .filter(|&(v, top)| v != u && top.tx.is_subset(base.tx) && top.rx.is_subset(base.rx))
                .fold(0, |m, (v, _)| m | 1 << v)
        })
        .collect()
}

/// Superposition orders (as covering edges) for a fixed codeword list.
fn superposition_orders(codewords: &[Codeword], policy: EdgePolicy) -> Vec<Vec<(usize, usize)>> {
    let allowed = allowed_above(codewords);
    match policy {
        EdgePolicy::All => all_orders(&allowed),
        EdgePolicy::Maximal => maximal_orders(codewords, &allowed),
    }
}

fn all_orders(allowed: &[u32]) -> Vec<Vec<(usize, usize)>> {
    let n = allowed.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..n).filter(move |&v| allowed[u] >> v & 1 == 1).map(move |v| (u, v)))
        .collect();
    assert!(pairs.len() <= 24, "too many candidate superposition edges to enumerate all orders");
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for mask in 0u32..1 << pairs.len() {
        let mut above = vec![0u32; n];
        for (k, &(u, v)) in pairs.iter().enumerate() {
            if mask >> k & 1 == 1 {
                above[u] |= 1 << v;
            }
        }
        // only transitively closed, antisymmetric subsets are distinct orders
        let before = above.clone();
        transitive_closure(&mut above);
        if above != before || (0..n).any(|i| above[i] >> i & 1 == 1) {
            continue;
        }
        if seen.insert(above.clone()) {
            out.push(transitive_reduction(&above));
        }
    }
    out
}

fn maximal_orders(codewords: &[Codeword], allowed: &[u32]) -> Vec<Vec<(usize, usize)>> {
    let n = codewords.len();
    // codewords with identical (tx, rx) may be layered either way: pick a linear order per class
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for u in 0..n {
        match classes
            .iter_mut()
            .find(|c| codewords[c[0]].tx == codewords[u].tx && codewords[c[0]].rx == codewords[u].rx)
        {
            Some(c) => c.push(u),
            None => classes.push(vec![u]),
        }
    }
    let mut rank_choices: Vec<Vec<Vec<usize>>> = Vec::new();
    for class in &classes {
        rank_choices.push(permutations(class));
    }
    let mut out = Vec::new();
    let mut idx = vec![0usize; classes.len()];
    loop {
        let mut rank = vec![0usize; n];
        let mut class_of = vec![0usize; n];
        for (ci, perm) in idx.iter().enumerate() {
            for (r, &u) in rank_choices[ci][*perm].iter().enumerate() {
                rank[u] = r;
                class_of[u] = ci;
            }
        }
        let mut above = vec![0u32; n];
        for u in 0..n {
            for v in 0..n {
                if allowed[u] >> v & 1 == 1 && (class_of[u] != class_of[v] || rank[u] < rank[v]) {
                    above[u] |= 1 << v;
                }
            }
        }
        out.push(transitive_reduction(&above));

        // odometer over per-class permutations
        let mut k = 0;
        loop {
            if k == idx.len() {
                return out;
            }
            idx[k] += 1;
            if idx[k] < rank_choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Schemes over every allocation. With `symmetric`, schemes that are mirror
/// images of an earlier one are dropped.
pub fn enumerate_all(opts: &EnumOptions, symmetric: bool) -> Vec<Cgras> {
    let all = enumerate_allocations()
        .iter()
        .flat_map(|a| enumerate_schemes(a, opts))
        .collect::<Vec<_>>();
    if symmetric {
        dedup_symmetric(all)
    } else {
        all
    }
}

/// Keep the first scheme of every mirror-equivalence class, preserving order.
pub fn dedup_symmetric(schemes: Vec<Cgras>) -> Vec<Cgras> {
    let mut seen = HashSet::new();
    schemes.into_iter().filter(|c| seen.insert(c.canonicalize())).collect()
}
