use crate::error::{Error, Result};
use crate::store::{NodeTable, TableBuilder};

/// Server-side partition document: `<root><part>p1 p2 ...</part>...</root>`.
///
/// Every part keeps a text child, empty for an empty partition, so part `i`
/// (1-based) sits at PRE `2i` and its text at `2i + 1`.
#[derive(Debug, Clone)]
pub struct TempPartitionDoc {
    pub table: NodeTable,
    /// Database the PRE values refer to.
    pub db_name: String,
    parts: usize,
}

impl TempPartitionDoc {
    pub fn build(partitions: &[Vec<usize>], db_name: &str) -> Self {
        let mut b = TableBuilder::new();
        b.start_element("root");
        let mut text = String::new();
        for part in partitions {
            b.start_element("part");
            text.clear();
            for (i, pre) in part.iter().enumerate() {
                if i > 0 {
                    text.push(' ');
                }
                text.push_str(&pre.to_string());
            }
            b.text(&text);
            b.end_element();
        }
        b.end_element();
        TempPartitionDoc { table: b.finish("tmp"), db_name: db_name.to_string(), parts: partitions.len() }
    }

    pub fn parts(&self) -> usize {
        self.parts
    }

    pub fn part_pre(i: usize) -> usize {
        2 * i
    }

    /// Lazily tokenizes partition `i` (1-based).
    pub fn tokens(&self, i: usize) -> Result<impl Iterator<Item = Result<usize>> + '_> {
        if i == 0 || i > self.parts {
            return Err(Error::Argument(format!("partition index {i} outside 1..={}", self.parts)));
        }
        let text = self.table.value(Self::part_pre(i) + 1);
        Ok(text
            .split_ascii_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Eval(format!("corrupt partition token `{t}`")))))
    }

    pub fn partitions(&self) -> Result<Vec<Vec<usize>>> {
        (1..=self.parts).map(|i| self.tokens(i)?.collect()).collect()
    }
}
