//! Persistence: JSON documents, CSV ingestion and result tables, and the
//! Gambit `.nfg` payoff format.

use std::fmt::Write as _;
use std::fs;
use std::io::Read;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{GameConfig, InterdictionProtocol, TargetSpec};
use crate::graph::{Coord, DirectedGameGraph, DistanceMetric, Node, NodeId};
use crate::instance::{FeatureRecord, GeneratedGame, PopulationBlock, TrackRecord, WeightTable};
use crate::matrix::{from_rows, BimatrixGame};
use crate::schedule::{schedule_game_matrix, ScheduleFormGame};
use crate::strategy::{GapSample, SolveReport};

fn parse_err(path: &str, line: u64, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_string(), line, message: message.into() }
}

/// Deserialises JSON, naming the offending field path and line on failure.
pub fn from_json_str<T: DeserializeOwned>(text: &str, origin: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let line = e.inner().line() as u64;
        let at = e.path().to_string();
        let msg = if at == "." { e.inner().to_string() } else { format!("at `{at}`: {}", e.inner()) };
        parse_err(origin, line, msg)
    })
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    from_json_str(&fs::read_to_string(path)?, &path.display().to_string())
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeDoc {
    pub id: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
}

/// Graph file: nodes, directed edges, and optional targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphDoc {
    pub nodes: Vec<NodeDoc>,
    pub edges: Vec<[NodeId; 2]>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub targets: Vec<TargetSpec>,
    #[serde(default, skip_serializing_if = "is_default_metric")]
    pub metric: DistanceMetric,
    /// When set, each listed edge also exists in reverse.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub undirected: bool,
}

fn is_default_metric(m: &DistanceMetric) -> bool {
    *m == DistanceMetric::default()
}

impl GraphDoc {
    pub fn from_graph(graph: &DirectedGameGraph, targets: &[TargetSpec]) -> Self {
        GraphDoc {
            nodes: graph
                .nodes()
                .iter()
                .map(|n| NodeDoc { id: n.id, lat: n.coord.map(|c| c.lat), lon: n.coord.map(|c| c.lon) })
                .collect(),
            edges: graph.edges().iter().map(|&(u, v)| [u, v]).collect(),
            targets: targets.to_vec(),
            metric: graph.metric(),
            undirected: false,
        }
    }

    pub fn to_graph(&self) -> Result<DirectedGameGraph> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| match (n.lat, n.lon) {
                (Some(lat), Some(lon)) => Ok(Node { id: n.id, coord: Some(Coord::new(lat, lon)) }),
                (None, None) => Ok(Node { id: n.id, coord: None }),
                _ => Err(Error::InvalidParameter(format!("node {} has only one coordinate", n.id))),
            })
            .collect::<Result<Vec<_>>>()?;
        let edges = self.edges.iter().map(|&[u, v]| (u, v));
        let graph = if self.undirected {
            DirectedGameGraph::undirected(nodes, edges, self.metric)?
        } else {
            DirectedGameGraph::new(nodes, edges, self.metric)?
        };
        for t in &self.targets {
            graph.index_of(t.node_id)?;
        }
        Ok(graph)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    #[serde(default)]
    pub normalized: bool,
}

impl MatrixDoc {
    pub fn from_game(g: &BimatrixGame) -> Self {
        MatrixDoc {
            a: BimatrixGame::to_rows(&g.a),
            b: BimatrixGame::to_rows(&g.b),
            row_labels: g.row_labels.clone(),
            col_labels: g.col_labels.clone(),
            normalized: g.normalized,
        }
    }

    pub fn to_game(&self) -> Result<BimatrixGame> {
        let mut g = BimatrixGame::new(from_rows(&self.a)?, from_rows(&self.b)?)?
            .with_labels(self.row_labels.clone(), self.col_labels.clone())?;
        g.normalized = self.normalized;
        Ok(g)
    }
}

/// Repository game file. Any subset of the sections may be present; the
/// matrices, when stored, take precedence over re-expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    #[serde(default)]
    pub general_sum: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<GameConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol: Option<InterdictionProtocol>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub homes: Option<Vec<Vec<NodeId>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sfg: Option<ScheduleFormGame>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrices: Option<MatrixDoc>,
}

/// Graph-game sections of a document, ready for the path-based solvers.
pub struct GraphGame {
    pub graph: DirectedGameGraph,
    pub targets: Vec<TargetSpec>,
    pub config: GameConfig,
    pub protocol: InterdictionProtocol,
}

impl GameDocument {
    pub fn from_matrix(game: &BimatrixGame, title: Option<String>) -> Self {
        GameDocument {
            title,
            general_sum: !game.is_zero_sum(),
            graph: None,
            config: None,
            protocol: None,
            homes: None,
            sfg: None,
            matrices: Some(MatrixDoc::from_game(game)),
        }
    }

    pub fn from_generated(game: &GeneratedGame, title: Option<String>, with_matrix: bool) -> Result<Self> {
        Ok(GameDocument {
            title,
            general_sum: game.general_sum,
            graph: Some(GraphDoc::from_graph(&game.graph, &game.targets)),
            config: Some(game.config.clone()),
            protocol: Some(game.protocol),
            homes: Some(game.homes.clone()),
            sfg: game.sfg.clone(),
            matrices: if with_matrix { Some(MatrixDoc::from_game(&game.matrix()?)) } else { None },
        })
    }

    pub fn graph_game(&self) -> Result<GraphGame> {
        let (Some(g), Some(config)) = (&self.graph, &self.config) else {
            return Err(Error::Unsupported("document has no graph game".into()));
        };
        Ok(GraphGame {
            graph: g.to_graph()?,
            targets: g.targets.clone(),
            config: config.clone(),
            protocol: self.protocol.unwrap_or_default(),
        })
    }

    /// Stored matrices, else the expanded schedule game, else the full path
    /// game built from the graph sections.
    pub fn to_matrix(&self) -> Result<BimatrixGame> {
        if let Some(m) = &self.matrices {
            return m.to_game();
        }
        if let Some(sfg) = &self.sfg {
            return schedule_game_matrix(sfg, self.general_sum);
        }
        let gg = self.graph_game()?;
        let def = crate::game::generate_player_actions(&gg.graph, &gg.config, &gg.targets, crate::game::Player::Defender)?;
        let att = crate::game::generate_player_actions(&gg.graph, &gg.config, &gg.targets, crate::game::Player::Attacker)?;
        let mode = if self.general_sum {
            crate::game::UtilityMode::GeneralSum { step_cost: gg.config.defender_step_cost, normalize: false }
        } else {
            crate::game::UtilityMode::ZeroSum
        };
        crate::game::build_utility_matrix(&def, &att, &gg.targets, &gg.protocol, &gg.graph, mode)
    }
}

fn read_csv<T: DeserializeOwned>(reader: impl Read, origin: &str, header: &[&str]) -> Result<Vec<(u64, T)>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let found = rdr.headers().map_err(|e| parse_err(origin, 1, e.to_string()))?.clone();
    for col in header {
        if !found.iter().any(|h| h == *col) {
            return Err(parse_err(origin, 1, format!("missing column `{col}`; expected header {}", header.join(","))));
        }
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize::<T>() {
        match rec {
            Ok(v) => out.push(v),
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(parse_err(origin, line, e.kind_message()));
            }
        }
    }
    // Data starts on line 2; records are one line each.
    Ok(out.into_iter().enumerate().map(|(i, v)| (i as u64 + 2, v)).collect())
}

trait KindMessage {
    fn kind_message(&self) -> String;
}

impl KindMessage for csv::Error {
    fn kind_message(&self) -> String {
        match self.kind() {
            csv::ErrorKind::Deserialize { err, .. } => match err.field() {
                Some(f) => format!("field {}: {}", f + 1, err.kind()),
                None => err.kind().to_string(),
            },
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => {
                format!("expected {expected_len} fields, found {len}")
            }
            _ => self.to_string(),
        }
    }
}

fn check_latlon(origin: &str, line: u64, lat: f64, lon: f64) -> Result<()> {
    if !((-90.0..=90.0).contains(&lat) && (-180.0..=180.0).contains(&lon)) {
        return Err(parse_err(origin, line, format!("coordinate ({lat}, {lon}) out of range")));
    }
    Ok(())
}

/// Tracks CSV with header `animal_id,lat,lon,timestamp`.
pub fn read_tracks(reader: impl Read, origin: &str) -> Result<Vec<TrackRecord>> {
    read_csv::<TrackRecord>(reader, origin, &["animal_id", "lat", "lon", "timestamp"])?
        .into_iter()
        .map(|(line, t)| check_latlon(origin, line, t.lat, t.lon).map(|_| t))
        .collect()
}

/// Features CSV with header `id,type,lat,lon`.
pub fn read_features(reader: impl Read, origin: &str) -> Result<Vec<FeatureRecord>> {
    read_csv::<FeatureRecord>(reader, origin, &["id", "type", "lat", "lon"])?
        .into_iter()
        .map(|(line, f)| check_latlon(origin, line, f.lat, f.lon).map(|_| f))
        .collect()
}

pub fn load_tracks(path: &Path) -> Result<Vec<TrackRecord>> {
    read_tracks(fs::File::open(path)?, &path.display().to_string())
}

pub fn load_features(path: &Path) -> Result<Vec<FeatureRecord>> {
    read_features(fs::File::open(path)?, &path.display().to_string())
}

pub fn load_blocks(path: &Path) -> Result<Vec<PopulationBlock>> {
    let blocks: Vec<PopulationBlock> = load_json(path)?;
    let origin = path.display().to_string();
    for (i, b) in blocks.iter().enumerate() {
        if b.polygon.len() < 3 {
            return Err(parse_err(&origin, 0, format!("block {i} ({}) has fewer than three vertices", b.geoid)));
        }
    }
    Ok(blocks)
}

pub fn load_weights(path: &Path) -> Result<WeightTable> {
    load_json(path)
}

pub fn write_tracks_csv(path: &Path, tracks: &[TrackRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for t in tracks {
        w.serialize(t)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_features_csv(path: &Path, features: &[FeatureRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for f in features {
        w.serialize(f)?;
    }
    w.flush()?;
    Ok(())
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Gambit payoff-format text. Payoff pairs run with the defender's action
/// varying fastest. Numbers use the shortest round-trip decimal form.
pub fn write_nfg(game: &BimatrixGame, title: &str) -> Result<String> {
    let (n, m) = (game.rows(), game.cols());
    for ((i, j), v) in game.a.indexed_iter().chain(game.b.indexed_iter()) {
        if !v.is_finite() {
            return Err(Error::NonFinitePayoff(i, j));
        }
    }
    let mut out = format!("NFG 1 R {} {{ \"Defender\" \"Attacker\" }} {{ {n} {m} }}\n", quote(title));
    let mut first = true;
    for j in 0..m {
        for i in 0..n {
            for v in [game.a[[i, j]], game.b[[i, j]]] {
                if !first {
                    out.push(' ');
                }
                first = false;
                write!(out, "{v}").expect("writing to a String");
            }
        }
    }
    out.push('\n');
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Quoted(String),
    Open,
    Close,
}

fn tokenize(text: &str, origin: &str) -> Result<Vec<(u64, Token)>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let mut line = 1u64;
    while let Some(&c) = chars.peek() {
        match c {
            '\n' => {
                line += 1;
                chars.next();
            }
            c if c.is_whitespace() => {
                chars.next();
            }
            '{' => {
                out.push((line, Token::Open));
                chars.next();
            }
            '}' => {
                out.push((line, Token::Close));
                chars.next();
            }
            '"' => {
                let start = line;
                chars.next();
                let mut s = String::new();
                loop {
                    match chars.next() {
                        None => return Err(parse_err(origin, start, "unterminated string")),
                        Some('\\') => match chars.next() {
                            Some(e) => s.push(e),
                            None => return Err(parse_err(origin, start, "unterminated string")),
                        },
                        Some('"') => break,
                        Some(ch) => {
                            if ch == '\n' {
                                line += 1;
                            }
                            s.push(ch);
                        }
                    }
                }
                out.push((start, Token::Quoted(s)));
            }
            _ => {
                let mut s = String::new();
                while let Some(&ch) = chars.peek() {
                    if ch.is_whitespace() || ch == '{' || ch == '}' || ch == '"' {
                        break;
                    }
                    s.push(ch);
                    chars.next();
                }
                out.push((line, Token::Word(s)));
            }
        }
    }
    Ok(out)
}

fn parse_number(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((p, q)) => {
            let (p, q) = (p.parse::<f64>().ok()?, q.parse::<f64>().ok()?);
            (q != 0.0).then(|| p / q)
        }
        None => s.parse().ok(),
    }
}

/// Parses a two-player payoff-format `.nfg` file. Accepts an optional
/// comment string after the dimensions and rational payoffs like `1/3`.
pub fn parse_nfg(text: &str, origin: &str) -> Result<(BimatrixGame, String)> {
    let toks = tokenize(text, origin)?;
    let mut it = toks.into_iter().peekable();
    let mut next = |what: &str| -> Result<(u64, Token)> {
        it.next().ok_or_else(|| parse_err(origin, 0, format!("unexpected end of file, expected {what}")))
    };
    let word = |t: (u64, Token), want: &str| -> Result<()> {
        match t.1 {
            Token::Word(ref w) if w == want => Ok(()),
            other => Err(parse_err(origin, t.0, format!("expected `{want}`, found {other:?}"))),
        }
    };
    word(next("NFG")?, "NFG")?;
    word(next("1")?, "1")?;
    word(next("R")?, "R")?;
    let title = match next("title")? {
        (_, Token::Quoted(s)) => s,
        (l, t) => return Err(parse_err(origin, l, format!("expected quoted title, found {t:?}"))),
    };
    match next("{")? {
        (_, Token::Open) => {}
        (l, t) => return Err(parse_err(origin, l, format!("expected `{{`, found {t:?}"))),
    }
    let mut players = 0;
    loop {
        match next("player name")? {
            (_, Token::Quoted(_)) => players += 1,
            (_, Token::Close) => break,
            (l, t) => return Err(parse_err(origin, l, format!("expected player name, found {t:?}"))),
        }
    }
    if players != 2 {
        return Err(parse_err(origin, 1, format!("expected 2 players, found {players}")));
    }
    match next("{")? {
        (_, Token::Open) => {}
        (l, t) => return Err(parse_err(origin, l, format!("expected `{{`, found {t:?}"))),
    }
    let mut dims = Vec::new();
    loop {
        match next("dimension")? {
            (l, Token::Word(w)) => dims.push(
                w.parse::<usize>()
                    .map_err(|_| parse_err(origin, l, format!("bad strategy count `{w}`")))?,
            ),
            (_, Token::Close) => break,
            (l, t) => return Err(parse_err(origin, l, format!("expected strategy count, found {t:?}"))),
        }
    }
    let [n, m] = dims[..] else {
        return Err(parse_err(origin, 1, format!("expected 2 strategy counts, found {}", dims.len())));
    };
    let mut rest: Vec<(u64, Token)> = it.collect();
    if let Some((_, Token::Quoted(_))) = rest.first() {
        rest.remove(0);
    }
    if rest.len() != 2 * n * m {
        let line = rest.last().map_or(1, |t| t.0);
        return Err(parse_err(origin, line, format!("expected {} payoffs, found {}", 2 * n * m, rest.len())));
    }
    let mut a = ndarray::Array2::zeros((n, m));
    let mut b = ndarray::Array2::zeros((n, m));
    for (k, (l, t)) in rest.into_iter().enumerate() {
        let Token::Word(w) = t else {
            return Err(parse_err(origin, l, format!("expected payoff, found {t:?}")));
        };
        let v = parse_number(&w).ok_or_else(|| parse_err(origin, l, format!("bad payoff `{w}`")))?;
        let cell = k / 2;
        let (i, j) = (cell % n, cell / n);
        if k % 2 == 0 {
            a[[i, j]] = v;
        } else {
            b[[i, j]] = v;
        }
    }
    Ok((BimatrixGame::new(a, b)?, title))
}

pub fn save_nfg(path: &Path, game: &BimatrixGame, title: &str) -> Result<()> {
    fs::write(path, write_nfg(game, title)?)?;
    Ok(())
}

pub fn load_nfg(path: &Path) -> Result<(BimatrixGame, String)> {
    parse_nfg(&fs::read_to_string(path)?, &path.display().to_string())
}

/// Gap trace as `iteration,time_s,gap`.
pub fn gap_csv(trace: &[GapSample]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["iteration", "time_s", "gap"])?;
    for s in trace {
        w.write_record([s.iteration.to_string(), s.time_s.to_string(), s.gap.to_string()])?;
    }
    into_string(w)
}

/// One row of the Stackelberg comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SseRow {
    pub instance: String,
    pub form: String,
    pub u_d: f64,
    pub runtime_s: f64,
    pub support: f64,
}

/// Rows as `instance,form,u_d,runtime_s,support`.
pub fn sse_csv(rows: &[SseRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    into_string(w)
}

pub(crate) fn into_string(w: csv::Writer<Vec<u8>>) -> Result<String> {
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Report as JSON with strategies and trace.
pub fn report_json(report: &SolveReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)?)
}
