use std::collections::BTreeMap;

use rayon::prelude::*;

use super::report::{InstanceResult, LEARNED, NO_CUTS};
use super::{BenchError, ExperimentConfig, Strategy};
use crate::active::{
    al_loop, build_instances, build_pool, initial_sample, label_entries, random_label_baseline, AlStep, GbdLabeler,
    InstanceStream, LabeledSet, Labeler, Metric, Pool,
};
use crate::cstr::{CaseStudy, NominalSchedule, ScheduleInstance, TransitionKey};
use crate::gbd::{select_initial_cuts, CutLibrary, GbdConfig, GbdResult};
use crate::policy::InitPolicy;
use crate::surrogate::{ModelKind, Surrogate};

/// Plant data, nominal plan and cut library for one configuration.
pub struct Experiment {
    pub config: ExperimentConfig,
    pub case: CaseStudy,
    pub nominal: NominalSchedule,
    pub library: CutLibrary<TransitionKey>,
    gbd: GbdConfig,
}

pub struct Trained {
    pub policy: InitPolicy,
    pub labeled: LabeledSet,
    /// Empty for random sampling.
    pub trace: Vec<AlStep>,
}

impl Experiment {
    pub fn new(config: ExperimentConfig) -> Result<Self, BenchError> {
        config.validate()?;
        let case = CaseStudy::new(config.case.clone())?;
        let nominal = case.nominal_schedule(&config.gbd_config())?;
        Self::with_nominal(config, case, nominal)
    }

    /// Reuses a nominal plan computed earlier for the same case.
    pub fn with_nominal(config: ExperimentConfig, case: CaseStudy, nominal: NominalSchedule) -> Result<Self, BenchError> {
        config.validate()?;
        let library = case.cut_library(config.learning.n_max)?;
        let gbd = config.gbd_config();
        Ok(Self {
            config,
            case,
            nominal,
            library,
            gbd,
        })
    }

    pub fn gbd(&self) -> &GbdConfig {
        &self.gbd
    }

    pub fn metric(&self) -> Metric {
        self.config.solver.metric
    }

    pub fn labeler<'a>(&'a self, instances: &'a BTreeMap<u64, ScheduleInstance>) -> GbdLabeler<'a> {
        GbdLabeler {
            case: &self.case,
            library: &self.library,
            instances,
            config: &self.gbd,
            metric: self.metric(),
        }
    }

    pub fn build_pool(&self) -> Pool {
        let l = &self.config.learning;
        build_pool(&self.case, &self.nominal, l.seed, l.pool_instances, l.n_max)
    }

    /// Labels every pool entry.
    pub fn label_pool(&self, pool: &Pool) -> Result<LabeledSet, BenchError> {
        let ids: Vec<u64> = pool.entries.iter().map(|e| e.sample_id).collect();
        let labeler = self.labeler(&pool.instances);
        Ok(label_entries(pool, &ids, &labeler, self.metric())?.0)
    }

    /// Trains a policy with the configured strategy and model; `labeler`
    /// supplies the labels (the solver, or a precomputed table).
    pub fn train(&self, pool: &Pool, labeler: &dyn Labeler) -> Result<Trained, BenchError> {
        let l = &self.config.learning;
        let metric = self.metric();
        let (model, labeled, trace) = match l.strategy {
            Strategy::Al => {
                let ids = initial_sample(pool, l.n_initial, l.seed)?;
                let (init, _) = label_entries(pool, &ids, labeler, metric)?;
                let out = al_loop(pool, init, l.budget, labeler, metric, &l.models.gp)?;
                let model = match l.model {
                    ModelKind::Gp => Surrogate::Gp(out.model),
                    kind => {
                        let (x, y) = out.labeled.training_data();
                        Surrogate::fit(kind, &x, &y, &l.models)?
                    }
                };
                (model, out.labeled, out.trace)
            }
            Strategy::Random => {
                let set = random_label_baseline(pool, l.n_initial + l.budget, l.seed, labeler, metric)?;
                let (x, y) = set.training_data();
                (Surrogate::fit(l.model, &x, &y, &l.models)?, set, Vec::new())
            }
        };
        Ok(Trained {
            policy: InitPolicy::new(model, l.n_max)?,
            labeled,
            trace,
        })
    }

    /// Fresh feasible disturbances from a stream disjoint from the pool's.
    pub fn held_out(&self, n_test: usize) -> Vec<ScheduleInstance> {
        build_instances(
            &self.case,
            &self.nominal,
            self.config.learning.seed,
            InstanceStream::HeldOut,
            n_test,
            10 * n_test.max(1),
        )
    }

    fn cost(&self, r: &GbdResult) -> f64 {
        match self.metric() {
            Metric::Wall => r.wall_seconds,
            Metric::Work => r.work_units,
        }
    }

    fn row(&self, id: u64, strategy: String, n: usize, r: &GbdResult, overhead: f64) -> InstanceResult {
        InstanceResult {
            instance_id: id,
            strategy,
            n_cuts: n,
            cost: self.cost(r),
            objective: r.upper,
            iterations: r.iterations,
            converged: r.converged,
            overhead_seconds: overhead,
        }
    }

    /// Solves every instance with no cuts, with the policy's choice, and
    /// with each fixed count. Rows are ordered by instance, then strategy.
    pub fn evaluate(&self, policy: &InitPolicy, tests: &[ScheduleInstance]) -> Result<Vec<InstanceResult>, BenchError> {
        let n_max = self.config.learning.n_max;
        let per: Vec<Result<Vec<InstanceResult>, BenchError>> = tests
            .par_iter()
            .map(|inst| {
                let mut rows = Vec::with_capacity(n_max + 1);
                let mut fixed = BTreeMap::new();
                for n in std::iter::once(0).chain(2..=n_max) {
                    let cuts = select_initial_cuts(&self.library, n)?;
                    fixed.insert(n, self.case.solve(inst, &cuts, &self.gbd)?);
                }
                rows.push(self.row(inst.id, NO_CUTS.into(), 0, &fixed[&0], 0.0));
                let learned = policy.solve_with_learned_init(&self.case, &self.library, inst, &self.gbd)?;
                rows.push(self.row(inst.id, LEARNED.into(), learned.n_cuts, &learned.result, learned.overhead_seconds));
                for n in 2..=n_max {
                    rows.push(self.row(inst.id, format!("n{n}"), n, &fixed[&n], 0.0));
                }
                Ok(rows)
            })
            .collect();
        let mut out = Vec::new();
        for r in per {
            out.extend(r?);
        }
        Ok(out)
    }
}
