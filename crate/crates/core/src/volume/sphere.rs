//! Fixed 100-direction hemisphere sampling.
//!
//! Points were optimised once by antipodal electrostatic repulsion and are
//! shipped as constants so every run sees the same directions. All points lie
//! on the upper hemisphere (z >= 0); each stands for the axis ±v.

use std::sync::OnceLock;

use crate::Vec3;

pub const N_SPHERE_DIRECTIONS: usize = 100;

#[allow(clippy::excessive_precision)]
const TABLE: [[f64; 3]; N_SPHERE_DIRECTIONS] = [
    [1.33204183401540888e-01, 1.59163511250071214e-02, 9.90960804114468630e-01],
    [-7.56405648587192003e-02, -1.32126370177357622e-01, 9.88342616328775847e-01],
    [-1.10396199903178144e-01, 1.38061961384918663e-01, 9.84251783775618394e-01],
    [1.26206042503120591e-01, 2.71259045475247540e-01, 9.54196292742514385e-01],
    [1.58754801868993517e-01, -2.64027666771983027e-01, 9.51360238848817708e-01],
    [-3.27542143567312982e-01, -7.75122182289434466e-03, 9.44804774939025260e-01],
    [3.55531272547582433e-01, -1.04676883544719962e-01, 9.28784293736743649e-01],
    [-2.75824826299029380e-01, -2.67896712566192019e-01, 9.23120802816910557e-01],
    [3.64401663686602817e-01, 1.58070313993044637e-01, 9.17728284045215892e-01],
    [-1.19116376190307433e-01, 3.93902905216544030e-01, 9.11401004051046515e-01],
    [-4.99319732250781412e-02, -4.09111598915755770e-01, 9.11117170117237918e-01],
    [-3.44801849514534353e-01, 2.53019595401672182e-01, 9.03931838643893815e-01],
    [1.21011993151735109e-01, 5.02511408803100856e-01, 8.56059800210340116e-01],
    [2.03339958556069844e-01, -4.94398728539526211e-01, 8.45117008746667953e-01],
    [4.27459303770618637e-01, -3.23147576626122035e-01, 8.44306927213440916e-01],
    [3.64132211468380429e-01, 4.04097393472800659e-01, 8.39114431504806912e-01],
    [-5.28958469521828900e-01, -1.43754467806099656e-01, 8.36383638354379455e-01],
    [5.61631624686613096e-01, -2.11027945417245413e-02, 8.27118244397017977e-01],
    [-5.58459951448305514e-01, 1.04658753198662718e-01, 8.22902805929872749e-01],
    [-2.58168259008378309e-01, -5.34971028698950635e-01, 8.04459538133130425e-01],
    [-4.62105376559868886e-01, -3.83613924659625627e-01, 7.99561741056749709e-01],
    [-3.45298035327358699e-01, 5.02494911710385739e-01, 7.92633667279051379e-01],
    [5.75004930033116368e-01, 2.46385855781938362e-01, 7.80168789755276482e-01],
    [-1.26279344226321394e-01, 6.23788463675479576e-01, 7.71324497087416017e-01],
    [-2.90236185623587543e-02, -6.38468674098166655e-01, 7.69100371707669761e-01],
    [-5.51597632904086366e-01, 3.51758051768810087e-01, 7.56310997137037533e-01],
    [4.11643003591786572e-01, -5.74532789353781381e-01, 7.07433467932706561e-01],
    [1.03599195859052792e-01, 7.02910120756838452e-01, 7.03693519051415306e-01],
    [3.44114527017932048e-01, 6.26405262996309942e-01, 6.99429509518828429e-01],
    [6.91376505924673146e-01, -1.83462202858494128e-01, 6.98813385087677652e-01],
    [5.99990124934834057e-01, -4.08611696964099769e-01, 6.87785090769494012e-01],
    [-7.31711708909699610e-01, -7.47519432725504973e-02, 6.77502857574360684e-01],
    [1.94637235790990293e-01, -7.10024840422441961e-01, 6.76742988457751493e-01],
    [5.59077098637081993e-01, 4.97232258514804071e-01, 6.63470330061419866e-01],
    [-6.70332683199267199e-01, -3.32836599542238265e-01, 6.63229893656815395e-01],
    [7.49158179594979323e-01, 7.51563960965473121e-02, 6.58113620943766464e-01],
    [-5.03215042932356083e-01, -5.75963308649860783e-01, 6.44236670530087263e-01],
    [-7.45900100389784382e-01, 1.79634783984968627e-01, 6.41376944254455905e-01],
    [-2.83899751889192697e-01, -7.23974469031299694e-01, 6.28698575684805028e-01],
    [-5.21278421431355499e-01, 5.92427022749275722e-01, 6.14246717587048741e-01],
    [-3.03768842000059325e-01, 7.31650531233937862e-01, 6.10255676561094806e-01],
    [7.38386811805963439e-01, 3.30812406492447753e-01, 5.87663226569180686e-01],
    [-5.47686838167655080e-02, -8.17510871902959457e-01, 5.73303031209012715e-01],
    [-7.12448753804298618e-01, 4.19083707055946886e-01, 5.62837116475936927e-01],
    [-6.32332858336338705e-02, 8.26177471410115438e-01, 5.59850281144048334e-01],
    [2.26456705589947765e-01, 8.24301553179895952e-01, 5.18887569631957035e-01],
    [4.22374647815166537e-01, -7.50743995586022783e-01, 5.07920377593327199e-01],
    [6.25720846073555048e-01, -5.93264144354053613e-01, 5.06469226915957194e-01],
    [7.82905314489845572e-01, -3.66278704597346794e-01, 5.02890822248771796e-01],
    [8.60377471943553407e-01, -1.14953750200668101e-01, 4.96524159620478467e-01],
    [4.73106027841064702e-01, 7.28144054270803531e-01, 4.95960605946204947e-01],
    [-8.35593021219362297e-01, -2.42909338298632399e-01, 4.92726451752713290e-01],
    [-7.05983436208469928e-01, -5.16975394227952467e-01, 4.84070066790061482e-01],
    [-8.79762974563464084e-01, 3.67787256901065257e-02, 4.73987799340719052e-01],
    [1.84027327403482432e-01, -8.61245688691934408e-01, 4.73698011900289873e-01],
    [-5.12723765526901576e-01, -7.31969783593294676e-01, 4.48703216135454275e-01],
    [6.78263290438119393e-01, 5.84590157100214447e-01, 4.45211474543954322e-01],
    [8.85335182819232069e-01, 1.45407242986844848e-01, 4.41631461457856145e-01],
    [-4.87645502252428698e-01, 7.67532487454392509e-01, 4.16047767491966147e-01],
    [-2.96509936442244271e-01, -8.64676616455028357e-01, 4.05482683411881484e-01],
    [-8.61629175652248058e-01, 3.09049647344229905e-01, 4.02595925390750731e-01],
    [-6.98226120506957315e-01, 5.96758481558483767e-01, 3.95423316623864596e-01],
    [-2.40030669465682855e-01, 8.89131960855565673e-01, 3.89653222623646378e-01],
    [8.41116223174042221e-01, 3.98441836459574372e-01, 3.65742535224106213e-01],
    [5.19472564794371330e-02, 9.34689479537068602e-01, 3.51649057139335364e-01],
    [-6.64569453092454104e-02, -9.38710260368056937e-01, 3.38240330977692349e-01],
    [3.34184101949206558e-01, 8.92687593374746013e-01, 3.02373687081410103e-01],
    [-8.53930434792491422e-01, -4.25584401128310863e-01, 2.99467410666609424e-01],
    [7.88992402402547865e-01, -5.38280318587602391e-01, 2.96218310663411477e-01],
    [9.11362132154023619e-01, -2.95610669414609173e-01, 2.86414727630963040e-01],
    [-9.46423320501932008e-01, -1.50423680478775773e-01, 2.85754465864168750e-01],
    [6.17376794654378669e-01, -7.33675476277150240e-01, 2.83841837881208536e-01],
    [4.04191836753929779e-01, -8.71720224172347069e-01, 2.77006876937013369e-01],
    [-6.89000645922532295e-01, -6.72190577107146359e-01, 2.70994350433168274e-01],
    [9.65106164820504930e-01, -4.24088008117854756e-02, 2.58401981879324005e-01],
    [5.63385832094820183e-01, 7.85860817154971358e-01, 2.54988588480637046e-01],
    [1.67066968512131514e-01, -9.55977682206240464e-01, 2.41237018626392991e-01],
    [-9.66652597473491526e-01, 1.01413576252131488e-01, 2.35155357900910633e-01],
    [-4.87255404923593149e-01, -8.48077932436452353e-01, 2.08197000187461123e-01],
    [7.50644162816991312e-01, 6.30853051301341616e-01, 1.96361321274239747e-01],
    [-4.06763601170193834e-01, 8.92419018059831148e-01, 1.95273318628486570e-01],
    [9.60566650162793412e-01, 2.02412750270960506e-01, 1.90632602465515943e-01],
    [-6.32074056881372193e-01, 7.52542706903088221e-01, 1.84829275020210154e-01],
    [-8.12095772421326023e-01, 5.53873475948763239e-01, 1.83642666763050494e-01],
    [-1.23137174856965251e-01, 9.77614371792805636e-01, 1.70608839842497834e-01],
    [-9.25947213339598396e-01, 3.39741330782725282e-01, 1.64916907158165427e-01],
    [-2.52430128311268931e-01, -9.56558126622559457e-01, 1.45861512103419355e-01],
    [8.91253704163576299e-01, 4.36954012051781970e-01, 1.21400272514338367e-01],
    [1.72561253706382145e-01, 9.77529730057429158e-01, 1.21071221077229937e-01],
    [-9.48163841900229509e-01, -3.05994272610819018e-01, 8.57486678752069353e-02],
    [-8.17317787236847004e-01, -5.70471631332122087e-01, 8.09552500553954862e-02],
    [8.88547353514220095e-01, -4.53438123453349773e-01, 6.98388771529183938e-02],
    [-1.64268945738206486e-03, -9.98179759000383582e-01, 6.02865681000577733e-02],
    [7.40431138581176929e-01, -6.70117765125233911e-01, 5.19991334826267540e-02],
    [4.26200583950241296e-01, 9.03299502997789605e-01, 4.90211191673508642e-02],
    [5.36467741366240092e-01, -8.42690419874508323e-01, 4.55545686526615326e-02],
    [9.79984879404038334e-01, -1.94209048088733571e-01, 4.37319308963211584e-02],
    [2.94490851794521558e-01, -9.55368327979207344e-01, 2.33772561168112472e-02],
    [-9.98317366191433964e-01, -5.40054868418255105e-02, 2.11150124692341956e-02],
    [-6.45186525182872228e-01, -7.63941790820126032e-01, 1.12821966385015116e-02],
];

/// The 100 unit directions.
pub fn sphere_directions() -> &'static [Vec3] {
    static DIRS: OnceLock<Vec<Vec3>> = OnceLock::new();
    DIRS.get_or_init(|| TABLE.iter().map(|p| Vec3::new(p[0], p[1], p[2]).normalize()).collect())
}
