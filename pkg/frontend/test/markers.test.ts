import { describe, expect, it } from 'vitest';

import { MarkerTracker } from '../src/markers.js';
import { GoalStatusMsg, GoalVariant } from '../src/protocol.js';

function status(goalId: number, st: GoalStatusMsg['status'],
                variant: GoalVariant | null): GoalStatusMsg {
  return {
    type: 'goal_status', tick: 0, goal_id: goalId, status: st,
    reason: null, command_id: null, variant,
  };
}

const NAV: GoalVariant = { kind: 'navigate_to', x: 2, y: 3 };
const PICK: GoalVariant = { kind: 'pick', object_id: 'remote' };
const PLACE: GoalVariant = { kind: 'place', x: 7.5, y: 7.5 };

describe('MarkerTracker', () => {
  it('navigate sets only the red target location', () => {
    const t = new MarkerTracker();
    t.apply(status(1, 'active', NAV));
    expect(t.markers.targetLocation).toEqual({ x: 2, y: 3 });
    expect(t.markers.targetObject).toBeNull();
    expect(t.markers.destination).toBeNull();
  });

  it('pick sets only the green object highlight', () => {
    const t = new MarkerTracker();
    t.apply(status(1, 'active', PICK));
    expect(t.markers.targetObject).toBe('remote');
    expect(t.markers.targetLocation).toBeNull();
    expect(t.markers.destination).toBeNull();
  });

  it('place sets only the blue destination spot', () => {
    const t = new MarkerTracker();
    t.apply(status(1, 'active', PLACE));
    expect(t.markers.destination).toEqual({ x: 7.5, y: 7.5 });
    expect(t.markers.targetLocation).toBeNull();
    expect(t.markers.targetObject).toBeNull();
  });

  it.each(['succeeded', 'preempted', 'cancelled', 'failed'] as const)(
    'terminal status %s clears every marker', (terminal) => {
      const t = new MarkerTracker();
      t.apply(status(1, 'active', NAV));
      t.apply(status(1, terminal, NAV));
      expect(t.markers.targetLocation).toBeNull();
      expect(t.markers.targetObject).toBeNull();
      expect(t.markers.destination).toBeNull();
    });

  it('override replaces markers atomically for the new goal', () => {
    const t = new MarkerTracker();
    t.apply(status(1, 'active', PICK));
    // the stream an override produces: pending(new), preempted(old), active(new)
    t.apply(status(2, 'pending', PLACE));
    t.apply(status(1, 'preempted', PICK));
    t.apply(status(2, 'active', PLACE));
    expect(t.markers.destination).toEqual({ x: 7.5, y: 7.5 });
    expect(t.markers.targetObject).toBeNull();
  });

  it('a stale terminal for an older goal does not clear the new markers', () => {
    const t = new MarkerTracker();
    t.apply(status(2, 'active', NAV));
    t.apply(status(1, 'preempted', PICK));
    expect(t.markers.targetLocation).toEqual({ x: 2, y: 3 });
  });

  it('rejected goals never set markers', () => {
    const t = new MarkerTracker();
    t.apply(status(1, 'pending', PLACE));
    t.apply(status(1, 'rejected', PLACE));
    expect(t.markers.destination).toBeNull();
  });
});
