#pragma once

#include <deque>
#include <optional>
#include <set>
#include <utility>
#include <vector>

#include "reflectsql/types.hpp"

namespace reflectsql {

enum class DrainMode { EventDriven, Timer };

// Which clock gates the spacing test. LastShown measures from the last
// reflection actually shown (the intended "τ between consecutive
// reflections"); HeadTrigger measures from when the queued head was
// created, the literal reading kept for replay comparisons.
enum class SpacingClock { LastShown, HeadTrigger };

struct SchedulerConfig {
    double tau_s = 300.0;
    DrainMode drain = DrainMode::EventDriven;
    double timer_interval_s = 15.0;
    SpacingClock clock = SpacingClock::LastShown;
};

// Pacing state for one session. pending holds at most one reflection per
// InterventionType, FIFO by arrival.
struct SchedulerState {
    SchedulerConfig config;
    std::deque<Reflection> pending;
    std::optional<double> last_shown_at;
    int task_id = 1;
    // Analysis only: which types were shown since the task started. The
    // dedup guard tests queue membership, not this set.
    std::set<InterventionType> shown_types_this_task;
    // Suppressed duplicates, for replay reports.
    std::vector<std::pair<double, InterventionType>> dropped;
    long ticks_ignored = 0;  // tick calls while event-driven
};

enum class ScheduleAction { ShowNow, Queued, ShowQueued, Dropped };

const std::string& to_string(ScheduleAction action);

struct ScheduleDecision {
    ScheduleAction action = ScheduleAction::Queued;
    // The reflection that was shown: the offered one for ShowNow, the
    // popped head for ShowQueued (the offered one is then dropped).
    std::optional<Reflection> shown;
};

// True when a new reflection may be shown at `now` under st's clock.
bool spacing_satisfied(const SchedulerState& st, double now);

// Runs the pacing step for one triggered reflection. In task 3 and later
// every offer shows immediately. In tasks 1-2: no same-type reflection
// pending and spacing satisfied shows r; spacing unsatisfied queues r; a
// same-type duplicate either pops and shows the queue head (spacing
// satisfied) or is dropped.
ScheduleDecision offer(SchedulerState& st, Reflection r, double now);

// Timer drain: shows the queue head when spacing allows. No-op in
// event-driven mode (counted in ticks_ignored).
std::optional<Reflection> tick(SchedulerState& st, double now);

// Moves to `task_id` (never regresses; same task is a no-op). Entering
// task 3 flushes the whole queue in FIFO order; the flushed reflections are
// returned already marked shown at `now`.
std::vector<Reflection> set_task(SchedulerState& st, int task_id, double now);

}  // namespace reflectsql
