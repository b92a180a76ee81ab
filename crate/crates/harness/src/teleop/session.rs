use irt_core::{Architecture, Point64};
use irt_sim::metrics::{lower_bound_verdict, score_episode};
use irt_sim::operator::clamp_unit;
use irt_sim::{simulate_episode, Episode, EpisodeTrace, FusionParams, OperatorInput, ScenarioSpec, SimParams, SimResult, Termination};

use super::protocol::{Baselines, EndFrame, LiveMetrics, StateFrame, TickInput, Transcript};

/// One live episode, advanced a tick at a time by whatever the operator
/// is holding. Every applied input is recorded so [`replay`] can
/// reproduce the trace.
#[derive(Clone, Debug)]
pub struct TeleopSession {
    id: u64,
    episode: Episode,
    initial_architecture: Architecture,
    ticks: Vec<TickInput>,
    live: LiveMetrics,
}

impl TeleopSession {
    pub fn new(id: u64, spec: &ScenarioSpec, architecture: Architecture, fusion: &FusionParams, params: &SimParams) -> SimResult<Self> {
        let episode = Episode::new(spec, architecture, fusion, params)?;
        let mut s = Self {
            id,
            episode,
            initial_architecture: architecture,
            ticks: Vec::new(),
            live: LiveMetrics { min_distance: f64::INFINITY, path_length: 0.0, elapsed: 0.0 },
        };
        s.observe();
        Ok(s)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn architecture(&self) -> Architecture {
        self.episode.architecture()
    }

    pub fn set_architecture(&mut self, architecture: Architecture) {
        self.episode.set_architecture(architecture);
    }

    pub fn is_done(&self) -> bool {
        self.episode.is_done()
    }

    pub fn termination(&self) -> Option<Termination> {
        self.episode.termination()
    }

    /// Advances one step holding `direction`. A finished episode ignores the call.
    pub fn tick(&mut self, direction: Point64) -> Option<Termination> {
        if self.is_done() {
            return self.termination();
        }
        let direction = clamp_unit(direction);
        self.ticks.push(TickInput { direction, architecture: self.architecture() });
        let before = self.episode.state().robot_pos;
        let input = OperatorInput::from_direction(direction, before, self.episode.params());
        let t = self.episode.step_with(input);
        self.live.path_length += (self.episode.state().robot_pos - before).norm();
        self.live.elapsed += self.episode.params().robot.dt;
        self.observe();
        t
    }

    fn observe(&mut self) {
        let s = self.episode.state();
        let crowd = s.crowd_positions.iter().map(|c| (c - s.robot_pos).norm());
        let walls = self.episode.scenario().obstacles.iter().map(|o| o.surface_distance(&s.robot_pos));
        self.live.min_distance = crowd.chain(walls).fold(self.live.min_distance, f64::min);
    }

    pub fn state_frame(&self) -> StateFrame {
        let s = self.episode.state();
        let scenario = self.episode.scenario();
        StateFrame {
            session: self.id,
            step: s.step,
            architecture: self.architecture(),
            robot: s.robot_pos,
            crowd: s.crowd_positions.clone(),
            goal: scenario.spec.goal,
            obstacles: scenario.obstacles.clone(),
            action: self.episode.decisions().last().map(|d| d.action),
            metrics: self.live,
        }
    }

    pub fn transcript(&self) -> Transcript {
        Transcript {
            spec: self.episode.scenario().spec.clone(),
            initial_architecture: self.initial_architecture,
            ticks: self.ticks.clone(),
        }
    }

    /// Ends the session; an unfinished episode comes back aborted.
    pub fn finish(self) -> (EpisodeTrace, Transcript) {
        let transcript = self.transcript();
        (self.episode.finish(), transcript)
    }
}

/// Re-runs a recorded session offline. With the session's own fusion and
/// simulation parameters the trace matches the live one exactly.
pub fn replay(transcript: &Transcript, fusion: &FusionParams, params: &SimParams) -> SimResult<EpisodeTrace> {
    let mut s = TeleopSession::new(0, &transcript.spec, transcript.initial_architecture, fusion, params)?;
    for t in &transcript.ticks {
        s.set_architecture(t.architecture);
        s.tick(t.direction);
    }
    Ok(s.finish().0)
}

/// Scores a finished session against scripted solo runs of the same seed.
pub fn end_frame(
    session: u64,
    trace: &EpisodeTrace,
    transcript: Transcript,
    tolerance: f64,
) -> SimResult<EndFrame> {
    let report = score_episode(trace)?;
    let solo = |a| simulate_episode(&trace.spec, a, &trace.fusion, &trace.params).and_then(|t| score_episode(&t));
    let baselines = Baselines { human_only: solo(Architecture::HumanOnly)?, autonomy_only: solo(Architecture::AutonomyOnly)? };
    let verdict = lower_bound_verdict(&report, &baselines.human_only, &baselines.autonomy_only, tolerance)?;
    Ok(EndFrame { session, termination: trace.termination, report, baselines, verdict, transcript })
}
