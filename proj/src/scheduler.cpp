#include "reflectsql/scheduler.hpp"

#include <algorithm>
#include <string>

namespace reflectsql {

namespace {

Reflection mark_shown(SchedulerState& st, Reflection r, double now) {
    r.shown_at = now;
    st.last_shown_at = now;
    st.shown_types_this_task.insert(r.intervention);
    return r;
}

}  // namespace

const std::string& to_string(ScheduleAction action) {
    static const std::string names[] = {"show_now", "queued", "show_queued", "dropped"};
    return names[static_cast<int>(action)];
}

bool spacing_satisfied(const SchedulerState& st, double now) {
    if (st.config.clock == SpacingClock::HeadTrigger)
        return st.pending.empty() || now - st.pending.front().created_at > st.config.tau_s;
    return !st.last_shown_at || now - *st.last_shown_at > st.config.tau_s;
}

ScheduleDecision offer(SchedulerState& st, Reflection r, double now) {
    if (st.task_id >= 3)
        return {ScheduleAction::ShowNow, mark_shown(st, std::move(r), now)};

    const bool same_type_pending =
        std::any_of(st.pending.begin(), st.pending.end(),
                    [&](const Reflection& p) { return p.intervention == r.intervention; });
    if (!same_type_pending) {
        if (spacing_satisfied(st, now))
            return {ScheduleAction::ShowNow, mark_shown(st, std::move(r), now)};
        st.pending.push_back(std::move(r));
        return {ScheduleAction::Queued, std::nullopt};
    }
    if (spacing_satisfied(st, now)) {
        Reflection head = std::move(st.pending.front());
        st.pending.pop_front();
        st.dropped.emplace_back(now, r.intervention);
        return {ScheduleAction::ShowQueued, mark_shown(st, std::move(head), now)};
    }
    st.dropped.emplace_back(now, r.intervention);
    return {ScheduleAction::Dropped, std::nullopt};
}

std::optional<Reflection> tick(SchedulerState& st, double now) {
    if (st.config.drain != DrainMode::Timer) {
        ++st.ticks_ignored;
        return std::nullopt;
    }
    if (st.task_id < 3 && !spacing_satisfied(st, now)) return std::nullopt;
    if (st.pending.empty()) return std::nullopt;
    Reflection head = std::move(st.pending.front());
    st.pending.pop_front();
    return mark_shown(st, std::move(head), now);
}

std::vector<Reflection> set_task(SchedulerState& st, int task_id, double now) {
    if (task_id < st.task_id)
        throw Error("task " + std::to_string(task_id) + " would regress from " +
                    std::to_string(st.task_id));
    std::vector<Reflection> flushed;
    if (task_id == st.task_id) return flushed;
    st.task_id = task_id;
    st.shown_types_this_task.clear();
    if (task_id >= 3) {
        while (!st.pending.empty()) {
            Reflection head = std::move(st.pending.front());
            st.pending.pop_front();
            flushed.push_back(mark_shown(st, std::move(head), now));
        }
    }
    return flushed;
}

}  // namespace reflectsql
