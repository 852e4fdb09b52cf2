// Wire types for the recognition service. Field names mirror the server's
// JSON exactly.

export interface Morphology {
  roots: string;
  stems: string;
  leaves: string;
  seeds: string;
}

export interface Ecology {
  environment: string;
  life_cycle: string;
}

export interface HerbEntry {
  content_id: string;
  name_cn: string;
  name_en: string;
  source_area: string;
  usage: string;
  morphology: Morphology;
  ecology: Ecology;
}

export interface PoseMsg {
  r: number[]; // 3x3 rotation, row-major
  t: number[]; // translation, target-width units
}

export interface DetectionMessage {
  type: "detection";
  seq: number;
  target_id: number;
  name: string;
  confidence: number;
  inliers: number;
  homography: number[]; // row-major, h33 = 1
  pose: PoseMsg;
  content: HerbEntry | null;
}

export interface NoDetectionMessage {
  type: "no_detection";
  seq: number;
}

export interface ErrorMessage {
  type: "error";
  error: string;
  detail?: string;
  seq: number | null;
}

export type ServerMessage = DetectionMessage | NoDetectionMessage | ErrorMessage;

export interface FrameMessage {
  type: "frame";
  seq: number;
  width: number;
  height: number;
  pixels: string; // base64 of raw 8-bit grayscale, row-major
}

export interface WireframeModel {
  name: string;
  vertices: number[][]; // [x, y, z] in target-plane units, z toward viewer
  edges: number[][]; // vertex index pairs
}

export interface TargetListing {
  id: number;
  name: string;
  stars: number;
}
