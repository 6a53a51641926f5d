use crate::graph::{CategoryMap, Graph, LabelTable};
use crate::model::{LossConfig, Objective};

/// An observed graph with its optional vertex labels and category memberships.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub graph: Graph,
    pub labels: Option<LabelTable>,
    pub categories: Option<CategoryMap>,
}

impl Dataset {
    pub fn new(graph: Graph) -> Dataset {
        Dataset {
            graph,
            labels: None,
            categories: None,
        }
    }

    pub fn with_labels(mut self, labels: LabelTable) -> Dataset {
        self.labels = Some(labels);
        self
    }

    pub fn with_categories(mut self, categories: CategoryMap) -> Dataset {
        self.categories = Some(categories);
        self
    }

    pub fn label_dim(&self) -> usize {
        self.labels.as_ref().map_or(0, LabelTable::label_dim)
    }

    pub fn objective(&self, config: LossConfig) -> Objective<'_> {
        Objective::new(config)
            .with_labels(self.labels.as_ref())
            .with_categories(self.categories.as_ref())
    }
}
