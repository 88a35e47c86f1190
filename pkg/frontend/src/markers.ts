// Marker state machine: the wizard's red target, green highlight, blue spot.
//
// Markers always mirror the active goal: navigate_to sets the target
// location, pick sets the target object, place sets the destination; every
// terminal status clears the set.

import { GoalStatusMsg, TERMINAL_STATUSES } from './protocol.js';

export interface MarkerSet {
  targetLocation: { x: number; y: number } | null; // rendered as a red marker
  targetObject: string | null;                     // rendered as a green highlight
  destination: { x: number; y: number } | null;    // rendered as a blue spot
}

export function emptyMarkers(): MarkerSet {
  return { targetLocation: null, targetObject: null, destination: null };
}

export class MarkerTracker {
  markers: MarkerSet = emptyMarkers();
  private goalId: number | null = null;

  apply(msg: GoalStatusMsg): void {
    if (msg.status === 'active' && msg.variant) {
      this.goalId = msg.goal_id;
      const m = emptyMarkers();
      switch (msg.variant.kind) {
        case 'navigate_to':
          m.targetLocation = { x: msg.variant.x, y: msg.variant.y };
          break;
        case 'pick':
          m.targetObject = msg.variant.object_id;
          break;
        case 'place':
          m.destination = { x: msg.variant.x, y: msg.variant.y };
          break;
      }
      this.markers = m;
      return;
    }
    if (TERMINAL_STATUSES.has(msg.status) && msg.goal_id === this.goalId) {
      this.markers = emptyMarkers();
      this.goalId = null;
    }
  }
}
