// View-model types mirroring the service's trace wire shape, plus the pure
// mapping from trace steps to rendered chat turns. Keeping this pure is what
// makes "reload equals incremental" hold by construction: both paths feed
// the same steps through the same function.

export type RouteKind = "image_based" | "text_based";

export interface RouteView {
  kind: RouteKind;
  garment_id?: string | null;
  score: number | null;
}

export interface InvocationView {
  function: string;
  item: string;
  details: string;
  reply: string;
}

export interface MaskSummaryView {
  set_bits: number;
  bbox: [number, number, number, number] | null;
}

export interface BackendCallView {
  kind: string;
  mode: string;
  latency_ms: number;
}

export type Outcome = "edited" | "refused_not_tryon" | "error";

export interface TraceStepView {
  user_text: string;
  raw_llm_response: string;
  invocation: InvocationView | null;
  route: RouteView | null;
  match_score: number | null;
  tau: number;
  mask_summary: MaskSummaryView | null;
  backend_calls: BackendCallView[];
  outcome: Outcome;
  error_code: string | null;
  reply: string;
  result_image_id: string | null;
}

export interface ChatTurnView {
  userText: string;
  assistantReply: string;
  imageUrl: string | null;
  functionName: string | null;
  routeKind: RouteKind | null;
  garmentId: string | null;
  // A score is never carried without its threshold.
  matchScore: number | null;
  tau: number;
  maskBbox: [number, number, number, number] | null;
  maskSetBits: number | null;
  backendCalls: BackendCallView[];
  outcome: Outcome;
  outcomeBadge: string;
  errorCode: string | null;
  rawResponse: string;
}

export function imageUrlFor(imageId: string | null): string | null {
  return imageId ? `/v1/images/${imageId}` : null;
}

export function badgeFor(step: TraceStepView): string {
  if (step.outcome === "error") {
    return step.error_code ?? "Error";
  }
  if (step.outcome === "refused_not_tryon") {
    return "NotTryOn";
  }
  if (step.route) {
    return step.route.kind === "image_based" ? "ImageBased" : "TextBased";
  }
  return "LocalizedEdit";
}

export function turnFromStep(step: TraceStepView): ChatTurnView {
  return {
    userText: step.user_text,
    assistantReply: step.reply,
    imageUrl: imageUrlFor(step.result_image_id),
    functionName: step.invocation ? step.invocation.function : null,
    routeKind: step.route ? step.route.kind : null,
    garmentId: step.route && step.route.garment_id ? step.route.garment_id : null,
    matchScore: step.match_score,
    tau: step.tau,
    maskBbox: step.mask_summary ? step.mask_summary.bbox : null,
    maskSetBits: step.mask_summary ? step.mask_summary.set_bits : null,
    backendCalls: step.backend_calls,
    outcome: step.outcome,
    outcomeBadge: badgeFor(step),
    errorCode: step.error_code,
    rawResponse: step.raw_llm_response,
  };
}

export function buildTurns(steps: TraceStepView[]): ChatTurnView[] {
  return steps.map(turnFromStep);
}

/** Human-readable score-vs-threshold line; never a score without its tau. */
export function scoreLine(turn: ChatTurnView): string | null {
  if (turn.matchScore === null) {
    return null;
  }
  const relation = turn.matchScore >= turn.tau ? "≥" : "<";
  return `score ${turn.matchScore.toFixed(3)} ${relation} τ ${turn.tau.toFixed(3)}`;
}
