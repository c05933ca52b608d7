//! Rule sets for the Plain, R-token and O-token revocation protocols.
//!
//! All three share setup, report and the RA's revocation request. They
//! differ in the pseudonym layout, in how the vehicle recognises and
//! confirms a request, and in what the RA checks on the confirmation.
//!
//! Every agreement event carries the variant's *token*: the pseudonym
//! public key for Plain, the R-token for R-token and the O-token for
//! O-token. `!VehiclePseudonym` records the token next to the pseudonym so
//! report and change rules stay variant-agnostic.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::Knowledge;
use crate::state::{Action, Budget, BudgetClass, Fact, Guard, Rule, SystemState};
use crate::term::{Term, Var};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProtocolError {
    #[error("unknown protocol '{0}' (expected plain, rtoken or otoken)")]
    UnknownProtocol(String),
    #[error("at least one vehicle is required")]
    NoVehicles,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolName {
    Plain,
    Rtoken,
    Otoken,
}

impl ProtocolName {
    pub const ALL: [ProtocolName; 3] = [
        ProtocolName::Plain,
        ProtocolName::Rtoken,
        ProtocolName::Otoken,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ProtocolName::Plain => "plain",
            ProtocolName::Rtoken => "rtoken",
            ProtocolName::Otoken => "otoken",
        }
    }
}

impl fmt::Display for ProtocolName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ProtocolName {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "plain" => Ok(ProtocolName::Plain),
            "rtoken" => Ok(ProtocolName::Rtoken),
            "otoken" => Ok(ProtocolName::Otoken),
            other => Err(ProtocolError::UnknownProtocol(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Vehicle,
    RevocationAuthority,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AgentId {
    pub role: Role,
    pub label: Term,
}

pub const RA_LABEL: &str = "RA";

pub fn vehicle_label(i: usize) -> String {
    format!("V{i}")
}

pub const TAG_REVOKE: &str = "revoke";
pub const TAG_CONFIRM: &str = "confirm";
pub const TAG_REASON: &str = "reason";

// Rule identifiers.
pub const SETUP_RA: &str = "SETUP_RA";
pub const SETUP_VEHICLE: &str = "SETUP_VEHICLE";
pub const SETUP_VEHICLE_PSEUDONYM: &str = "SETUP_VEHICLE_PSEUDONYM";
pub const REPORT: &str = "REPORT";
pub const RA_OSR_REQ_SEND: &str = "RA_OSR_REQ_SEND";
pub const OSR_REQ_RECV: &str = "OSR_REQ_RECV";
pub const REV_AUTH_OSR_CONF_RECV: &str = "REV_AUTH_OSR_CONF_RECV";
pub const CHANGE_PSEUDONYM: &str = "CHANGE_PSEUDONYM";
pub const REVEAL_LTK: &str = "REVEAL_LTK";
pub const REVEAL_SK_PSI: &str = "REVEAL_SK_PSI";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtocolSpec {
    pub name: ProtocolName,
    /// Sorted by rule id.
    pub rules: Vec<Rule>,
    pub change_enabled: bool,
    pub reveals_enabled: bool,
}

impl ProtocolSpec {
    pub fn rule(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }

    /// Same protocol with the key-reveal rules added.
    pub fn with_reveals(self) -> ProtocolSpec {
        build(self.name, self.change_enabled, true)
    }
}

fn pv(name: &str) -> Term {
    Term::var(Var::public(name))
}

fn fv(name: &str) -> Term {
    Term::var(Var::fresh(name))
}

fn mv(name: &str) -> Term {
    Term::var(Var::msg(name))
}

fn c(label: &str) -> Term {
    Term::public(label)
}

fn tup(items: Vec<Term>) -> Term {
    Term::tuple(items)
}

fn act(label: &str, args: Vec<Term>) -> Action {
    Action::new(label, args)
}

/// Pseudonym and token for a vehicle with long-term key `~LTK`, pseudonym
/// key `sk` and the variant's extra fresh value.
fn pseudonym(name: ProtocolName, sk: Term, extra: Option<Term>) -> (Term, Term) {
    match name {
        ProtocolName::Plain => {
            let ps = Term::pk(sk);
            (ps.clone(), ps)
        }
        ProtocolName::Rtoken => {
            let r = extra.expect("R-token needs a nonce");
            let sigma = Term::renc(tup(vec![pv("Vj"), Term::pk(fv("LTK")), r]), fv("LTK"));
            (tup(vec![Term::pk(sk), sigma.clone()]), sigma)
        }
        ProtocolName::Otoken => {
            let sko = extra.expect("O-token needs a key");
            let phi = Term::oenc(sko.clone(), fv("LTK"));
            (tup(vec![Term::pk(sk), Term::pk(sko), phi.clone()]), phi)
        }
    }
}

fn extra_fresh(name: ProtocolName) -> Option<&'static str> {
    match name {
        ProtocolName::Plain => None,
        ProtocolName::Rtoken => Some("r"),
        ProtocolName::Otoken => Some("SK_O"),
    }
}

fn setup_rules(name: ProtocolName) -> Vec<Rule> {
    let mut ra = Rule::new(SETUP_RA);
    ra.actor = Some(Var::public("RA"));
    ra.premises.push(Fact::linear("SetupRA", vec![pv("RA")]));
    ra.fresh_vars.push(Var::fresh("SK_RA"));
    ra.events.push(act("RevAuthSetup", vec![pv("RA")]));
    ra.conclusions
        .push(Fact::persistent("RevAuthSK", vec![pv("RA"), fv("SK_RA")]));
    ra.conclusions.push(Fact::persistent(
        "RevAuthPK",
        vec![pv("RA"), Term::pk(fv("SK_RA"))],
    ));
    ra.network_out.push(Term::pk(fv("SK_RA")));

    let mut v = Rule::new(SETUP_VEHICLE);
    v.actor = Some(Var::public("Vj"));
    v.premises
        .push(Fact::linear("SetupVehicle", vec![pv("Vj")]));
    v.fresh_vars.push(Var::fresh("LTK"));
    v.events.push(act("VehicleSetup", vec![pv("Vj")]));
    v.conclusions
        .push(Fact::persistent("VjLTK", vec![pv("Vj"), fv("LTK")]));
    v.conclusions.push(Fact::persistent(
        "VjPK",
        vec![pv("Vj"), Term::pk(fv("LTK"))],
    ));
    v.conclusions
        .push(Fact::linear("PseudonymSetup", vec![pv("Vj")]));

    let mut p = Rule::new(SETUP_VEHICLE_PSEUDONYM);
    p.actor = Some(Var::public("Vj"));
    p.premises
        .push(Fact::linear("PseudonymSetup", vec![pv("Vj")]));
    p.premises
        .push(Fact::persistent("VjLTK", vec![pv("Vj"), fv("LTK")]));
    p.fresh_vars.push(Var::fresh("SK_PSi"));
    let extra = extra_fresh(name).map(|x| {
        p.fresh_vars.push(Var::fresh(x));
        fv(x)
    });
    let (ps, tok) = pseudonym(name, fv("SK_PSi"), extra);
    p.events
        .push(act("InitVjPseudonym", vec![pv("Vj"), tok.clone()]));
    p.conclusions
        .push(Fact::persistent("VehiclePSi", vec![pv("Vj"), fv("SK_PSi")]));
    p.conclusions.push(Fact::persistent(
        "VehiclePseudonym",
        vec![pv("Vj"), fv("SK_PSi"), ps.clone(), tok],
    ));
    p.conclusions
        .push(Fact::linear("CanChange", vec![pv("Vj"), fv("SK_PSi")]));
    p.network_out.push(ps);

    vec![ra, v, p]
}

fn report_rule() -> Rule {
    let mut r = Rule::new(REPORT);
    r.actor = Some(Var::public("RA"));
    r.premises
        .push(Fact::persistent("RevAuthSK", vec![pv("RA"), fv("SK_RA")]));
    r.premises.push(Fact::persistent(
        "VehiclePseudonym",
        vec![pv("Vj"), fv("SK_PSi"), mv("ps"), mv("tok")],
    ));
    r.events.push(act("Reported", vec![pv("Vj"), mv("tok")]));
    r.conclusions.push(Fact::linear(
        "RevokeRequest",
        vec![pv("RA"), pv("Vj"), mv("ps"), mv("tok")],
    ));
    r.budget = Some(Budget {
        class: BudgetClass::Sessions,
        key: Vec::new(),
    });
    r
}

fn osr_req_body(ps: Term) -> Term {
    tup(vec![c(TAG_REVOKE), ps, c(TAG_REASON)])
}

fn ra_send_rule() -> Rule {
    let req = osr_req_body(mv("ps"));
    let msg = tup(vec![
        pv("RA"),
        pv("Vj"),
        req.clone(),
        Term::sign(req, fv("SK_RA")),
    ]);
    let mut r = Rule::new(RA_OSR_REQ_SEND);
    r.actor = Some(Var::public("RA"));
    r.premises.push(Fact::linear(
        "RevokeRequest",
        vec![pv("RA"), pv("Vj"), mv("ps"), mv("tok")],
    ));
    r.premises
        .push(Fact::persistent("RevAuthSK", vec![pv("RA"), fv("SK_RA")]));
    r.events
        .push(act("OsrReqMsgSentTo", vec![pv("RA"), pv("Vj"), mv("tok")]));
    r.events
        .push(act("Running", vec![pv("RA"), pv("Vj"), msg.clone()]));
    r.conclusions.push(Fact::linear(
        "AwaitRevokeConfirmation",
        vec![pv("RA"), pv("Vj"), mv("ps"), mv("tok")],
    ));
    r.network_out.push(msg);
    r
}

fn vehicle_recv_rule(name: ProtocolName) -> Rule {
    let mut r = Rule::new(OSR_REQ_RECV);
    r.actor = Some(Var::public("Vj"));
    r.premises
        .push(Fact::persistent("RevAuthPK", vec![pv("RA"), mv("PK_RA")]));
    let (ps, tok, active, conf, conf_key) = match name {
        ProtocolName::Plain => {
            // Only the active pseudonym is recognised.
            r.premises
                .push(Fact::persistent("VehiclePSi", vec![pv("Vj"), fv("SK_PSi")]));
            r.premises
                .push(Fact::linear("CanChange", vec![pv("Vj"), fv("SK_PSi")]));
            let ps = Term::pk(fv("SK_PSi"));
            let conf = tup(vec![pv("Vj"), c(TAG_CONFIRM), ps.clone()]);
            (ps.clone(), ps, fv("SK_PSi"), conf, fv("SK_PSi"))
        }
        ProtocolName::Rtoken => {
            r.premises
                .push(Fact::persistent("VjLTK", vec![pv("Vj"), fv("LTK")]));
            r.premises
                .push(Fact::linear("CanChange", vec![pv("Vj"), fv("SK_cur")]));
            let ps = tup(vec![mv("pkps"), mv("tok")]);
            let conf = tup(vec![c(TAG_CONFIRM), mv("tok")]);
            (ps, mv("tok"), fv("SK_cur"), conf, fv("LTK"))
        }
        ProtocolName::Otoken => {
            r.premises
                .push(Fact::persistent("VjLTK", vec![pv("Vj"), fv("LTK")]));
            r.premises
                .push(Fact::linear("CanChange", vec![pv("Vj"), fv("SK_cur")]));
            let ps = tup(vec![mv("pkps"), mv("pko"), mv("tok")]);
            let conf = tup(vec![c(TAG_CONFIRM), mv("tok")]);
            (ps, mv("tok"), fv("SK_cur"), conf, fv("SK_O"))
        }
    };
    let req = osr_req_body(ps);
    let req_msg = tup(vec![pv("RA"), pv("Vj"), req.clone(), mv("sig")]);
    r.network_in.push(req_msg.clone());
    r.guards.push(Guard {
        lhs: Term::verify(mv("sig"), req, mv("PK_RA")),
        rhs: Term::truth(),
    });
    match name {
        ProtocolName::Plain => {}
        ProtocolName::Rtoken => r.guards.push(Guard {
            lhs: Term::rdec(mv("tok"), fv("LTK")),
            rhs: tup(vec![pv("Vj"), Term::pk(fv("LTK")), fv("r")]),
        }),
        ProtocolName::Otoken => r.guards.push(Guard {
            lhs: Term::odec(mv("tok"), fv("LTK")),
            rhs: fv("SK_O"),
        }),
    }
    let conf_msg = tup(vec![
        pv("Vj"),
        pv("RA"),
        conf.clone(),
        Term::sign(conf, conf_key),
    ]);
    r.events
        .push(act("Commit", vec![pv("RA"), pv("Vj"), req_msg]));
    r.events.push(act(
        "OsrReqMsgRecvBy",
        vec![pv("Vj"), pv("RA"), tok.clone()],
    ));
    r.events
        .push(act("OsrReqVerified", vec![pv("Vj"), tok.clone()]));
    r.events
        .push(act("DeleteAllPseudonyms", vec![pv("Vj"), active]));
    r.events
        .push(act("Running", vec![pv("Vj"), pv("RA"), conf_msg.clone()]));
    r.events
        .push(act("OsrConfSentBy", vec![pv("Vj"), pv("RA"), tok]));
    r.conclusions
        .push(Fact::linear("IsRevoked", vec![pv("Vj")]));
    r.network_out.push(conf_msg);
    r
}

fn ra_recv_rule(name: ProtocolName) -> Rule {
    let mut r = Rule::new(REV_AUTH_OSR_CONF_RECV);
    r.actor = Some(Var::public("RA"));
    let conf_msg = match name {
        ProtocolName::Plain => {
            r.premises.push(Fact::linear(
                "AwaitRevokeConfirmation",
                vec![pv("RA"), pv("Vj"), mv("ps"), mv("tok")],
            ));
            let conf = tup(vec![pv("Vj"), c(TAG_CONFIRM), mv("tok")]);
            r.guards.push(Guard {
                lhs: Term::verify(mv("csig"), conf.clone(), mv("ps")),
                rhs: Term::truth(),
            });
            tup(vec![pv("Vj"), pv("RA"), conf, mv("csig")])
        }
        ProtocolName::Rtoken => {
            // No verification: the RA does not hold PK_Vj. It only parses the
            // signature and checks the R-token is the reported one.
            r.premises.push(Fact::linear(
                "AwaitRevokeConfirmation",
                vec![pv("RA"), pv("Vj"), mv("ps"), mv("tok")],
            ));
            let conf = tup(vec![c(TAG_CONFIRM), mv("tok")]);
            tup(vec![
                pv("Vj"),
                pv("RA"),
                conf.clone(),
                Term::sign(conf, fv("k")),
            ])
        }
        ProtocolName::Otoken => {
            r.premises.push(Fact::linear(
                "AwaitRevokeConfirmation",
                vec![
                    pv("RA"),
                    pv("Vj"),
                    tup(vec![mv("pkps"), mv("pko"), mv("tok")]),
                    mv("tok"),
                ],
            ));
            let conf = tup(vec![c(TAG_CONFIRM), mv("tok")]);
            r.guards.push(Guard {
                lhs: Term::verify(mv("csig"), conf.clone(), mv("pko")),
                rhs: Term::truth(),
            });
            tup(vec![pv("Vj"), pv("RA"), conf, mv("csig")])
        }
    };
    r.network_in.push(conf_msg.clone());
    r.events
        .push(act("Commit", vec![pv("Vj"), pv("RA"), conf_msg]));
    r.events.push(act(
        "OsrConfAcceptedBy",
        vec![pv("RA"), pv("Vj"), mv("tok")],
    ));
    r
}

fn change_rule(name: ProtocolName) -> Rule {
    let mut r = Rule::new(CHANGE_PSEUDONYM);
    r.actor = Some(Var::public("Vj"));
    r.premises
        .push(Fact::linear("CanChange", vec![pv("Vj"), fv("SK_old")]));
    r.premises.push(Fact::persistent(
        "VehiclePseudonym",
        vec![pv("Vj"), fv("SK_old"), mv("ps_old"), mv("tok_old")],
    ));
    r.premises
        .push(Fact::persistent("VjLTK", vec![pv("Vj"), fv("LTK")]));
    r.fresh_vars.push(Var::fresh("SK_PSi"));
    let extra = extra_fresh(name).map(|x| {
        r.fresh_vars.push(Var::fresh(x));
        fv(x)
    });
    let (ps, tok) = pseudonym(name, fv("SK_PSi"), extra);
    r.events.push(act(
        "ChangePseudonymForVehicle",
        vec![pv("Vj"), mv("tok_old"), tok.clone()],
    ));
    r.events.push(act("HasChanged", vec![pv("Vj")]));
    r.conclusions
        .push(Fact::persistent("VehiclePSi", vec![pv("Vj"), fv("SK_PSi")]));
    r.conclusions.push(Fact::persistent(
        "VehiclePseudonym",
        vec![pv("Vj"), fv("SK_PSi"), ps.clone(), tok],
    ));
    r.conclusions
        .push(Fact::linear("CanChange", vec![pv("Vj"), fv("SK_PSi")]));
    r.network_out.push(ps);
    r.budget = Some(Budget {
        class: BudgetClass::Changes,
        key: vec![Var::public("Vj")],
    });
    r
}

fn reveal_rules() -> Vec<Rule> {
    let mut ltk = Rule::new(REVEAL_LTK);
    ltk.actor = Some(Var::public("Vj"));
    ltk.premises
        .push(Fact::persistent("VjLTK", vec![pv("Vj"), fv("LTK")]));
    ltk.events.push(act("RevealLtk", vec![pv("Vj")]));
    ltk.events
        .push(act("VehicleCompromised", vec![pv("Vj"), fv("LTK")]));
    ltk.network_out.push(fv("LTK"));
    ltk.budget = Some(Budget {
        class: BudgetClass::Reveals,
        key: vec![Var::public("Vj"), Var::fresh("LTK")],
    });

    let mut ps = Rule::new(REVEAL_SK_PSI);
    ps.actor = Some(Var::public("Vj"));
    ps.premises
        .push(Fact::persistent("VehiclePSi", vec![pv("Vj"), fv("SK_PSi")]));
    ps.events.push(act("RevealSKPSi", vec![pv("Vj")]));
    ps.events
        .push(act("VjSKPSiReveal", vec![pv("Vj"), fv("SK_PSi")]));
    ps.events
        .push(act("VehicleCompromised", vec![pv("Vj"), fv("SK_PSi")]));
    ps.network_out.push(fv("SK_PSi"));
    ps.budget = Some(Budget {
        class: BudgetClass::Reveals,
        key: vec![Var::public("Vj"), Var::fresh("SK_PSi")],
    });
    vec![ltk, ps]
}

fn build(name: ProtocolName, change_enabled: bool, reveals_enabled: bool) -> ProtocolSpec {
    let mut rules = setup_rules(name);
    rules.push(report_rule());
    rules.push(ra_send_rule());
    rules.push(vehicle_recv_rule(name));
    rules.push(ra_recv_rule(name));
    if change_enabled {
        rules.push(change_rule(name));
    }
    if reveals_enabled {
        rules.extend(reveal_rules());
    }
    rules.sort_by(|a, b| a.id.cmp(&b.id));
    debug_assert!(rules.iter().all(|r| r.unbound_variables().is_empty()));
    ProtocolSpec {
        name,
        rules,
        change_enabled,
        reveals_enabled,
    }
}

/// Rule set for a protocol variant; reveal rules are off.
pub fn build_protocol(name: ProtocolName, change_enabled: bool) -> ProtocolSpec {
    build(name, change_enabled, false)
}

pub fn build_protocol_named(
    name: &str,
    change_enabled: bool,
) -> Result<ProtocolSpec, ProtocolError> {
    Ok(build_protocol(name.parse()?, change_enabled))
}

pub fn agents(n_vehicles: usize) -> Vec<AgentId> {
    let mut out = vec![AgentId {
        role: Role::RevocationAuthority,
        label: Term::public(RA_LABEL),
    }];
    out.extend((1..=n_vehicles).map(|i| AgentId {
        role: Role::Vehicle,
        label: Term::public(&vehicle_label(i)),
    }));
    out
}

/// Setup tokens for one RA and `n_vehicles` vehicles. The adversary knows
/// the agent names and the protocol's constant tags.
pub fn initial_state(
    _spec: &ProtocolSpec,
    n_vehicles: usize,
) -> Result<SystemState, ProtocolError> {
    if n_vehicles == 0 {
        return Err(ProtocolError::NoVehicles);
    }
    let mut k = Knowledge::new();
    for label in [TAG_REVOKE, TAG_CONFIRM, TAG_REASON] {
        k = k.observe(&Term::public(label));
    }
    let mut state = SystemState::new(Knowledge::new());
    for a in agents(n_vehicles) {
        k = k.observe(&a.label);
        match a.role {
            Role::RevocationAuthority => state.add_fact(Fact::linear("SetupRA", vec![a.label])),
            Role::Vehicle => state.add_fact(Fact::linear("SetupVehicle", vec![a.label])),
        }
    }
    state.knowledge = k;
    Ok(state)
}

/// Fresh names that must never reach the adversary: vehicle long-term keys,
/// pseudonym keys, O-token keys and the RA key.
pub fn secrets(state: &SystemState) -> Vec<Term> {
    let mut out = Vec::new();
    for (fact, _) in state.facts() {
        match &*fact.name {
            "VjLTK" | "VehiclePSi" | "RevAuthSK" => out.push(fact.args[1].clone()),
            "VehiclePseudonym" => {
                let mut names = Vec::new();
                fact.args[2].fresh_names(&mut names);
                out.extend(
                    names
                        .into_iter()
                        .filter(|n| &*n.hint == "SK_O")
                        .map(Term::fresh),
                );
            }
            _ => {}
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Secrets the adversary can derive in `state`.
pub fn leaked_secrets(state: &SystemState) -> Vec<Term> {
    secrets(state)
        .into_iter()
        .filter(|s| state.knowledge.knows(s))
        .collect()
}
