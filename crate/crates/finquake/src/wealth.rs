//! Capital ledger with asymmetric staking.
//!
//! Every agent starts with the same capital. A bet's stake depends on how the
//! previous one went: nothing is risked on the first bet, half the current
//! capital after a win, a tenth after a loss. Settling adds or subtracts the
//! stake, so capital stays strictly positive forever (the worst single hit is
//! half of it).

use crate::error::{Error, Result};

pub const INITIAL_CAPITAL: f64 = 1000.0;
/// Capital above which an agent counts as "rich" in summaries.
pub const RICH_THRESHOLD: f64 = 10_000.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetOutcome {
    Won,
    Lost,
}

/// One agent's account.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Account {
    pub capital: f64,
    pub bets: u64,
    pub last_outcome: Option<BetOutcome>,
}

/// A recorded settlement, kept when stake history is enabled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StakeEvent {
    pub agent: u32,
    pub capital_before: f64,
    pub stake: f64,
    pub outcome: BetOutcome,
}

/// Per-agent capital ledger.
#[derive(Debug, Clone)]
pub struct CapitalLedger {
    accounts: Vec<Account>,
    initial: f64,
    history: Option<Vec<StakeEvent>>,
}

impl CapitalLedger {
    pub fn new(agents: usize) -> Self {
        Self::with_initial(agents, INITIAL_CAPITAL, false)
    }

    pub fn with_stake_history(agents: usize) -> Self {
        Self::with_initial(agents, INITIAL_CAPITAL, true)
    }

    pub fn with_initial(agents: usize, initial: f64, record_history: bool) -> Self {
        CapitalLedger {
            accounts: vec![
                Account {
                    capital: initial,
                    bets: 0,
                    last_outcome: None,
                };
                agents
            ],
            initial,
            history: record_history.then(Vec::new),
        }
    }

    pub fn len(&self) -> usize {
        self.accounts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accounts.is_empty()
    }

    pub fn initial_capital(&self) -> f64 {
        self.initial
    }

    pub fn account(&self, agent: u32) -> &Account {
        &self.accounts[agent as usize]
    }

    pub fn accounts(&self) -> &[Account] {
        &self.accounts
    }

    pub fn history(&self) -> Option<&[StakeEvent]> {
        self.history.as_deref()
    }

    /// Stake of the agent's next bet: 0 on the first bet, half the capital
    /// after a win, a tenth after a loss.
    pub fn stake(&self, agent: u32) -> f64 {
        let account = &self.accounts[agent as usize];
        match account.last_outcome {
            None => 0.0,
            Some(BetOutcome::Won) => 0.5 * account.capital,
            Some(BetOutcome::Lost) => 0.1 * account.capital,
        }
    }

    /// Settle one bet: apply the stake with the outcome's sign and update the
    /// agent's record.
    pub fn settle(&mut self, agent: u32, outcome: BetOutcome) {
        let stake = self.stake(agent);
        let account = &mut self.accounts[agent as usize];
        let before = account.capital;
        match outcome {
            BetOutcome::Won => account.capital += stake,
            BetOutcome::Lost => account.capital -= stake,
        }
        account.bets += 1;
        account.last_outcome = Some(outcome);
        if let Some(history) = &mut self.history {
            history.push(StakeEvent {
                agent,
                capital_before: before,
                stake,
                outcome,
            });
        }
    }
}

/// Summary statistics over one group of agents.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct GroupSummary {
    pub count: usize,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// Share of agents whose capital ended below the initial endowment.
    pub fraction_below_initial: f64,
    /// Share of agents above [`RICH_THRESHOLD`].
    pub fraction_above_rich: f64,
}

impl GroupSummary {
    pub fn from_capitals(capitals: &[f64], initial: f64) -> Result<GroupSummary> {
        if capitals.is_empty() {
            return Err(Error::insufficient("empty capital group"));
        }
        let count = capitals.len();
        let mean = capitals.iter().sum::<f64>() / count as f64;
        let min = capitals.iter().copied().fold(f64::INFINITY, f64::min);
        let max = capitals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let below = capitals.iter().filter(|&&c| c < initial).count();
        let rich = capitals.iter().filter(|&&c| c > RICH_THRESHOLD).count();
        Ok(GroupSummary {
            count,
            mean,
            min,
            max,
            fraction_below_initial: below as f64 / count as f64,
            fraction_above_rich: rich as f64 / count as f64,
        })
    }
}

/// Final-wealth report for all agents and, when any exist, the selected
/// subgroup (the random traders, in simulation use).
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct WealthSummary {
    pub all: GroupSummary,
    pub random: Option<GroupSummary>,
}

/// Summarize a ledger, splitting out the agents where `is_random` is set.
pub fn wealth_summary(ledger: &CapitalLedger, is_random: &[bool]) -> Result<WealthSummary> {
    if is_random.len() != ledger.len() {
        return Err(Error::invalid(format!(
            "kind mask has {} entries for {} agents",
            is_random.len(),
            ledger.len()
        )));
    }
    let all_capitals: Vec<f64> = ledger.accounts().iter().map(|a| a.capital).collect();
    let random_capitals: Vec<f64> = ledger
        .accounts()
        .iter()
        .zip(is_random)
        .filter(|(_, &r)| r)
        .map(|(a, _)| a.capital)
        .collect();
    Ok(WealthSummary {
        all: GroupSummary::from_capitals(&all_capitals, ledger.initial_capital())?,
        random: if random_capitals.is_empty() {
            None
        } else {
            Some(GroupSummary::from_capitals(
                &random_capitals,
                ledger.initial_capital(),
            )?)
        },
    })
}
