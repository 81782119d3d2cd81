//! Deterministic XMark-like and DBLP-like document generators.
//!
//! Shapes follow the benchmark documents; text is drawn from small pools so
//! the suite's value predicates have hits.

use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Dataset {
    XmarkLike,
    DblpLike,
}

impl Dataset {
    pub fn default_db_name(self) -> &'static str {
        match self {
            Dataset::XmarkLike => "xmark",
            Dataset::DblpLike => "dblp",
        }
    }
}

impl FromStr for Dataset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xmark" | "xmark_like" | "xmark-like" => Ok(Dataset::XmarkLike),
            "dblp" | "dblp_like" | "dblp-like" => Ok(Dataset::DblpLike),
            other => Err(Error::Argument(format!("unknown dataset `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GenSpec {
    pub dataset: Dataset,
    /// Multiplier on the full-size entity counts.
    pub scale: f64,
    pub seed: u64,
}

// entity counts at scale 1
const PEOPLE: f64 = 255_000.0;
const OPEN_AUCTIONS: f64 = 120_000.0;
const CLOSED_AUCTIONS: f64 = 97_500.0;
const CATGRAPH_EDGES: f64 = 10_000.0;
const CATEGORIES: f64 = 10_000.0;
const CONTINENTS: [(&str, f64); 6] = [
    ("africa", 5_500.0),
    ("asia", 20_000.0),
    ("australia", 22_000.0),
    ("europe", 60_000.0),
    ("namerica", 100_000.0),
    ("samerica", 10_000.0),
];
const DBLP_RECORDS: f64 = 6_000_000.0;
/// Enough categories that `category52` always exists.
const MIN_CATEGORIES: usize = 60;

const COUNTRIES: [&str; 8] =
    ["Germany", "Japan", "France", "Canada", "Brazil", "Kenya", "India", "Australia"];
const PAYMENTS: [&str; 4] = ["Creditcard", "Money order", "Personal Check", "Cash"];
const WORDS: [&str; 24] = [
    "gold", "vessel", "quiet", "harbor", "lamp", "river", "stone", "amber", "signal", "meadow", "copper", "winter",
    "garden", "mirror", "thread", "canyon", "velvet", "ember", "orbit", "marble", "cedar", "lantern", "tide", "folio",
];
const FIRST: [&str; 10] = ["Ada", "Kurt", "Mei", "Omar", "Lena", "Ravi", "Sven", "Ines", "Tomas", "Yuki"];
const LAST: [&str; 10] = ["Okafor", "Lindqvist", "Haddad", "Moreau", "Tanaka", "Silva", "Novak", "Kowalski", "Reyes", "Ito"];

impl GenSpec {
    pub fn new(dataset: Dataset, scale: f64, seed: u64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Argument(format!("scale must be positive, got {scale}")));
        }
        Ok(GenSpec { dataset, scale, seed })
    }

    /// Picks the scale whose document has roughly `nodes` nodes, by
    /// generating a small probe and extrapolating.
    pub fn for_nodes(dataset: Dataset, nodes: usize, seed: u64) -> Result<Self> {
        let probe_scale = match dataset {
            Dataset::XmarkLike => 0.002,
            Dataset::DblpLike => 0.0005,
        };
        let probe = GenSpec::new(dataset, probe_scale, seed)?;
        let n = crate::store::Database::parse(&generate(&probe), "probe")?.table.len();
        GenSpec::new(dataset, probe_scale * nodes as f64 / n as f64, seed)
    }

    fn count(&self, base: f64) -> usize {
        ((base * self.scale).round() as usize).max(1)
    }
}

fn words(rng: &mut ChaCha8Rng, out: &mut String, n: usize) {
    for i in 0..n {
        if i > 0 {
            out.push(' ');
        }
        out.push_str(WORDS.choose(rng).unwrap());
    }
}

fn person_name(rng: &mut ChaCha8Rng) -> String {
    format!("{} {}", FIRST.choose(rng).unwrap(), LAST.choose(rng).unwrap())
}

pub fn generate(spec: &GenSpec) -> Vec<u8> {
    match spec.dataset {
        Dataset::XmarkLike => xmark(spec),
        Dataset::DblpLike => dblp(spec),
    }
    .into_bytes()
}

struct Xmark<'a> {
    rng: ChaCha8Rng,
    out: &'a mut String,
    people: usize,
    items: usize,
    categories: usize,
}

impl Xmark<'_> {
    fn text(&mut self, tag: &str, n: usize) {
        let _ = write!(self.out, "<{tag}>");
        words(&mut self.rng, self.out, n);
        let _ = write!(self.out, "</{tag}>");
    }

    fn leaf(&mut self, tag: &str, value: &str) {
        let _ = write!(self.out, "<{tag}>{value}</{tag}>");
    }

    fn description(&mut self) {
        self.out.push_str("<description>");
        if self.rng.gen_bool(0.5) {
            self.text("text", 6);
        } else {
            self.out.push_str("<parlist>");
            for _ in 0..self.rng.gen_range(1..=3) {
                self.out.push_str("<listitem>");
                self.text("text", 4);
                self.out.push_str("</listitem>");
            }
            self.out.push_str("</parlist>");
        }
        self.out.push_str("</description>");
    }

    fn payment(&mut self) -> String {
        // a non-empty subset, in pool order
        let mask = self.rng.gen_range(1..16u32);
        PAYMENTS.iter().enumerate().filter(|(i, _)| mask & (1 << i) != 0).map(|(_, p)| *p).collect::<Vec<_>>().join(", ")
    }

    fn item(&mut self, id: usize) {
        let _ = write!(self.out, "<item id=\"item{id}\">");
        let location = if self.rng.gen_bool(0.75) { "United States" } else { COUNTRIES.choose(&mut self.rng).unwrap() };
        self.leaf("location", location);
        let quantity = match self.rng.gen_range(0..10) {
            0 => "0",
            1 | 2 => "2",
            _ => "1",
        };
        self.leaf("quantity", quantity);
        self.text("name", 2);
        let payment = self.payment();
        self.leaf("payment", &payment);
        self.description();
        self.text("shipping", 3);
        for _ in 0..self.rng.gen_range(1..=3) {
            let c = self.rng.gen_range(0..self.categories);
            let _ = write!(self.out, "<incategory category=\"category{c}\"/>");
        }
        self.out.push_str("</item>");
    }

    fn person(&mut self, id: usize) {
        let _ = write!(self.out, "<person id=\"person{id}\">");
        let name = person_name(&mut self.rng);
        self.leaf("name", &name);
        let mail = name.replace(' ', ".").to_lowercase();
        let _ = write!(self.out, "<emailaddress>mailto:{mail}@example.org</emailaddress>");
        if self.rng.gen_bool(0.5) {
            self.out.push_str("<address>");
            self.text("street", 2);
            let country = if self.rng.gen_bool(0.75) { "United States" } else { COUNTRIES.choose(&mut self.rng).unwrap() };
            self.leaf("country", country);
            self.out.push_str("</address>");
        }
        if self.rng.gen_bool(0.3) {
            let income = self.rng.gen_range(10_000..100_000);
            let _ = write!(self.out, "<profile income=\"{income}\">");
            let c = self.rng.gen_range(0..self.categories);
            let _ = write!(self.out, "<interest category=\"category{c}\"/>");
            self.out.push_str("</profile>");
        }
        self.out.push_str("</person>");
    }

    fn annotation(&mut self) {
        let p = self.rng.gen_range(0..self.people);
        let _ = write!(self.out, "<annotation><author person=\"person{p}\"/>");
        self.description();
        let h = self.rng.gen_range(1..=10);
        let _ = write!(self.out, "<happiness>{h}</happiness></annotation>");
    }

    fn open_auction(&mut self, id: usize) {
        let _ = write!(self.out, "<open_auction id=\"open_auction{id}\">");
        let initial = self.rng.gen_range(1..200);
        let _ = write!(self.out, "<initial>{initial}</initial>");
        let mut current = initial;
        for _ in 0..self.rng.gen_range(0..=6) {
            let p = self.rng.gen_range(0..self.people);
            let inc = self.rng.gen_range(1..30);
            current += inc;
            let _ = write!(
                self.out,
                "<bidder><date>2001-0{}-1{}</date><personref person=\"person{p}\"/><increase>{inc}.00</increase></bidder>",
                self.rng.gen_range(1..10),
                self.rng.gen_range(0..10)
            );
        }
        let _ = write!(self.out, "<current>{current}.00</current>");
        let item = self.rng.gen_range(0..self.items);
        let seller = self.rng.gen_range(0..self.people);
        let _ = write!(self.out, "<itemref item=\"item{item}\"/><seller person=\"person{seller}\"/>");
        self.annotation();
        self.leaf("quantity", "1");
        let kind = if self.rng.gen_bool(0.8) { "Regular" } else { "Featured" };
        self.leaf("type", kind);
        self.out.push_str("</open_auction>");
    }

    fn closed_auction(&mut self) {
        let (s, b) = (self.rng.gen_range(0..self.people), self.rng.gen_range(0..self.people));
        let item = self.rng.gen_range(0..self.items);
        let price = self.rng.gen_range(5..500);
        let _ = write!(
            self.out,
            "<closed_auction><seller person=\"person{s}\"/><buyer person=\"person{b}\"/><itemref item=\"item{item}\"/><price>{price}.00</price>"
        );
        self.leaf("quantity", "1");
        self.annotation();
        self.out.push_str("</closed_auction>");
    }
}

fn xmark(spec: &GenSpec) -> String {
    let mut out = String::new();
    let counts: Vec<usize> = CONTINENTS.iter().map(|(_, n)| spec.count(*n)).collect();
    let items: usize = counts.iter().sum();
    let categories = spec.count(CATEGORIES).max(MIN_CATEGORIES);
    let people = spec.count(PEOPLE);
    let mut g = Xmark { rng: ChaCha8Rng::seed_from_u64(spec.seed), out: &mut out, people, items, categories };
    g.out.push_str("<site><regions>");
    let mut id = 0;
    for ((name, _), n) in CONTINENTS.iter().zip(&counts) {
        let _ = write!(g.out, "<{name}>");
        for _ in 0..*n {
            g.item(id);
            id += 1;
        }
        let _ = write!(g.out, "</{name}>");
    }
    g.out.push_str("</regions><people>");
    for i in 0..people {
        g.person(i);
    }
    g.out.push_str("</people><open_auctions>");
    for i in 0..spec.count(OPEN_AUCTIONS) {
        g.open_auction(i);
    }
    g.out.push_str("</open_auctions><closed_auctions>");
    for _ in 0..spec.count(CLOSED_AUCTIONS) {
        g.closed_auction();
    }
    g.out.push_str("</closed_auctions><catgraph>");
    for _ in 0..spec.count(CATGRAPH_EDGES) {
        let (a, b) = (g.rng.gen_range(0..categories), g.rng.gen_range(0..categories));
        let _ = write!(g.out, "<edge from=\"category{a}\" to=\"category{b}\"/>");
    }
    g.out.push_str("</catgraph><categories>");
    for i in 0..categories {
        let _ = write!(g.out, "<category id=\"category{i}\">");
        g.text("name", 1);
        g.out.push_str("<description>");
        g.text("text", 5);
        g.out.push_str("</description></category>");
    }
    g.out.push_str("</categories></site>");
    out
}

fn dblp(spec: &GenSpec) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut out = String::from("<dblp>");
    for i in 0..spec.count(DBLP_RECORDS) {
        let kind = match rng.gen_range(0..10) {
            0 => "book",
            1..=4 => "inproceedings",
            _ => "article",
        };
        let _ = write!(out, "<{kind} key=\"r{i}\">");
        for _ in 0..rng.gen_range(1..=4) {
            let name = person_name(&mut rng);
            let _ = write!(out, "<author>{name}</author>");
        }
        out.push_str("<title>");
        words(&mut rng, &mut out, 5);
        let year = rng.gen_range(1970..2020);
        let _ = write!(out, "</title><year>{year}</year></{kind}>");
    }
    out.push_str("</dblp>");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::Database;

    #[test]
    fn deterministic() {
        let s = GenSpec::new(Dataset::XmarkLike, 0.0005, 7).unwrap();
        assert_eq!(generate(&s), generate(&s));
        let other = GenSpec { seed: 8, ..s };
        assert_ne!(generate(&s), generate(&other));
        let d = GenSpec::new(Dataset::DblpLike, 0.0001, 7).unwrap();
        assert_eq!(generate(&d), generate(&d));
    }

    #[test]
    fn xmark_shape() {
        let s = GenSpec::new(Dataset::XmarkLike, 0.001, 1).unwrap();
        let db = Database::parse(&generate(&s), "x").unwrap();
        let t = &db.table;
        let site = t.children(0).next().unwrap();
        let kids: Vec<_> = t.children(site).map(|c| t.name(c).unwrap().to_string()).collect();
        assert_eq!(kids, ["regions", "people", "open_auctions", "closed_auctions", "catgraph", "categories"]);
        assert_eq!(db.summary.count(&["site", "people", "person"]), Some(255));
        assert_eq!(db.summary.count(&["site", "open_auctions", "open_auction"]), Some(120));
        assert_eq!(db.summary.parent_labels("open_auction").len(), 1);
    }

    #[test]
    fn bad_scale() {
        assert!(GenSpec::new(Dataset::DblpLike, 0.0, 1).is_err());
        assert!(GenSpec::new(Dataset::DblpLike, f64::NAN, 1).is_err());
    }
}
