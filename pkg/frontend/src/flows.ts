// Enrollment and verification state machines.
//
// Each submission is strictly sequential: one in-flight request at most,
// and a failed upload discards the attempt (the user redraws) rather than
// queueing it. A RETRAIN_REQUIRED drift flag on verify routes into a
// re-enrollment prompt.

import { RequestRejected, ServiceClient, ServiceUnreachable } from "./client";
import { TraceDocument, VerifyResult } from "./types";

export type EnrollPhase = "idle" | "submitting" | "collecting" | "enrolled" | "error";

export interface EnrollState {
  phase: EnrollPhase;
  staged: number;
  needed: number;
  message: string;
  retriable: boolean;
}

export class EnrollFlow {
  state: EnrollState = {
    phase: "idle", staged: 0, needed: 10, message: "", retriable: false,
  };
  private inFlight = false;

  constructor(
    private readonly client: ServiceClient,
    private readonly userId: string,
    private readonly task: string = "signature-static",
  ) {}

  async start(): Promise<EnrollState> {
    try {
      const status = await this.client.status(this.userId).catch(async (err) => {
        if (err instanceof RequestRejected && err.status === 404) {
          return this.client.createUser(this.userId, this.task);
        }
        throw err;
      });
      this.state = {
        phase: status.status === "enrolled" ? "enrolled" : "collecting",
        staged: status.staged,
        needed: status.needed,
        message: "",
        retriable: false,
      };
    } catch (err) {
      this.state = this.failure(err);
    }
    return this.state;
  }

  async submit(trace: TraceDocument): Promise<EnrollState> {
    if (this.inFlight) {
      return { ...this.state, message: "submission already in flight" };
    }
    this.inFlight = true;
    this.state = { ...this.state, phase: "submitting", message: "" };
    try {
      const status = await this.client.enroll(this.userId, trace);
      this.state = {
        phase: status.status === "enrolled" ? "enrolled" : "collecting",
        staged: status.staged,
        needed: status.needed,
        message: status.status === "enrolled"
          ? "enrolled"
          : `captured ${status.staged}/${status.needed}`,
        retriable: false,
      };
    } catch (err) {
      this.state = this.failure(err);
    } finally {
      this.inFlight = false;
    }
    return this.state;
  }

  private failure(err: unknown): EnrollState {
    if (err instanceof ServiceUnreachable) {
      return {
        ...this.state,
        phase: "error",
        message: "service unreachable; attempt discarded, please retry",
        retriable: true,
      };
    }
    if (err instanceof RequestRejected) {
      // per-attempt quality feedback: validation details come from the server
      return {
        ...this.state,
        phase: "collecting",
        message: `attempt rejected: ${err.message}`,
        retriable: false,
      };
    }
    return { ...this.state, phase: "error", message: String(err), retriable: false };
  }
}

export type VerifyPhase = "idle" | "submitting" | "decided" | "retrain" | "error";

export interface VerifyState {
  phase: VerifyPhase;
  accepted: boolean | null;
  distance: number | null;
  threshold: number | null;
  /** distance/threshold, for the decision bar (1.0 sits at the threshold) */
  ratio: number | null;
  message: string;
  retriable: boolean;
}

export class VerifyFlow {
  state: VerifyState = {
    phase: "idle", accepted: null, distance: null, threshold: null,
    ratio: null, message: "", retriable: false,
  };
  private inFlight = false;

  constructor(
    private readonly client: ServiceClient,
    private readonly userId: string,
    private readonly method: "euclidean" | "hamming" = "euclidean",
    private readonly adapt: boolean = true,
  ) {}

  async submit(trace: TraceDocument): Promise<VerifyState> {
    if (this.inFlight) {
      return { ...this.state, message: "submission already in flight" };
    }
    this.inFlight = true;
    this.state = { ...this.state, phase: "submitting", message: "" };
    try {
      const result: VerifyResult = await this.client.verify(
        this.userId, trace, this.method, this.adapt,
      );
      const ratio = result.threshold > 0 ? result.distance / result.threshold : null;
      this.state = {
        phase: result.drift === "RETRAIN_REQUIRED" ? "retrain" : "decided",
        accepted: result.accepted,
        distance: result.distance,
        threshold: result.threshold,
        ratio,
        message: result.drift === "RETRAIN_REQUIRED"
          ? "template drift detected: please re-enroll"
          : result.accepted ? "accepted" : "rejected",
        retriable: false,
      };
    } catch (err) {
      if (err instanceof ServiceUnreachable) {
        this.state = {
          ...this.state,
          phase: "error",
          message: "service unreachable; attempt discarded, please retry",
          retriable: true,
        };
      } else if (err instanceof RequestRejected) {
        this.state = {
          ...this.state,
          phase: "error",
          message: `request rejected: ${err.message}`,
          retriable: false,
        };
      } else {
        this.state = { ...this.state, phase: "error", message: String(err), retriable: false };
      }
    } finally {
      this.inFlight = false;
    }
    return this.state;
  }
}
